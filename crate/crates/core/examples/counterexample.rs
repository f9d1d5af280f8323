//! Geometric weights `a_n = 2^{-(n+1)}`: `J*` nearly kills a fixed vector, and
//! the residual halves with every extra weight.

use quasi_similarity::model::{geometric_counterexample, Model, ModelConfig};
use quasi_similarity::Result;

pub fn run_example() -> Result<Vec<f64>> {
    let model = Model::new(ModelConfig {
        m: 10,
        ..ModelConfig::default()
    })?;
    let mut measured = Vec::new();
    println!("{:>3} {:>14} {:>14} {:>10}", "K", "|J*F|", "bound", "|F|");
    for k in 2..=9 {
        let r = geometric_counterexample(&model, k)?;
        println!(
            "{k:>3} {:>14.6e} {:>14.6e} {:>10.6}",
            r.measured, r.bound, r.f_norm
        );
        measured.push(r.measured);
    }
    Ok(measured)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
