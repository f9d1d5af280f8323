//! Joinings of finite rotations and the Markov operators they induce.

use quasi_similarity::joinings::{
    compose_markov, indecomposability, joining_from_markov, joining_space, markov_from_joining,
    random_vertex, FiniteMps, JoiningMatrix,
};
use quasi_similarity::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(usize, usize)> {
    let z2 = FiniteMps::rotation(2)?;
    let z3 = FiniteMps::rotation(3)?;
    let coprime = joining_space(&z2, &z3);
    println!(
        "Z2 x Z3: dimension {}, disjoint {}",
        coprime.dimension,
        coprime.is_disjoint()
    );

    let z4 = FiniteMps::rotation(4)?;
    let selfj = joining_space(&z4, &z4);
    println!("Z4 x Z4: dimension {}", selfj.dimension);

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let vertex = random_vertex(&z4, &z4, &mut rng);
    let report = indecomposability(&vertex, &z4, &z4, 12)?;
    println!(
        "random vertex: {} active cells, {} free directions, extreme {}",
        report.active_cells, report.free_directions, report.extreme
    );

    let phi = markov_from_joining(&vertex, &z4, &z4)?;
    let back = joining_from_markov(&phi.matrix, &z4, &z4)?;
    println!("round trip deviation {:.1e}", back.max_abs_diff(&vertex));

    let product = markov_from_joining(&JoiningMatrix::product(&z4, &z4), &z4, &z4)?;
    let c = compose_markov(&phi, &phi, 20, 1)?;
    println!(
        "Phi o Phi: distance from constants {:.4} (Phi alone {:.4}, product joining {:.1e})",
        c.distance,
        phi.distance_from_constants(),
        product.distance_from_constants()
    );
    Ok((coprime.dimension, selfj.dimension))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
