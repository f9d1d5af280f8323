//! The two skew-product extensions in the character basis, checked against
//! pointwise grid permutations.

use quasi_similarity::finsets::FinSet;
use quasi_similarity::model::{
    isometry_in, koopman_t1, koopman_t2, oracle_deviation, skew_ergodic, CharacterIndex, Model,
    ModelConfig, ModelVector,
};
use quasi_similarity::Result;

pub fn run_example() -> Result<f64> {
    let model = Model::new(ModelConfig::default())?;
    let cfg = model.config();
    println!(
        "N = {}, s = {}, W = {}, safe window {}, {} characters, ergodic skew product: {}",
        cfg.n,
        cfg.s,
        cfg.window(),
        cfg.safe_window(),
        cfg.dimension(),
        skew_ergodic(cfg)
    );

    let chi = ModelVector::basis(CharacterIndex::new(1, Some(FinSet::new([0, 1])?)));
    for (name, op) in [
        ("U_T1", koopman_t1()),
        ("U_T2", koopman_t2()),
        ("U_I1", isometry_in(1)),
    ] {
        let image = model.try_apply(&op, &chi)?;
        for (idx, c) in image.iter() {
            let set = idx.set.as_ref().map_or("{}".to_string(), |s| s.to_string());
            println!(
                "{name} (1, {{0,1}}) = ({:.3}{:+.3}i) ({}, {set})",
                c.re, c.im, idx.j
            );
        }
    }

    let mut worst: f64 = 0.0;
    for op in [koopman_t1(), koopman_t2(), isometry_in(0)] {
        worst = worst.max(oracle_deviation(&model, &op, model.window())?.0);
    }
    println!("largest deviation from the grid oracles: {worst:.2e}");
    Ok(worst)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
