//! Fourier weights of `exp(2 - 1/|x - 1/2|)` and the injectivity margin of
//! convolution by them.

use quasi_similarity::finsets::FinSet;
use quasi_similarity::weights::{fourier_coefficients, injectivity_margin, normalized_weights};
use quasi_similarity::Result;

pub fn run_example() -> Result<Vec<f64>> {
    let raw = fourier_coefficients(64, 4096)?;
    println!("K = 64: sum {:.12}, a_0 {:.12}", raw.sum(), raw.get(0));
    for n in [1, 2, 4, 8, 16, 32, 64] {
        let scaled = (n * n) as f64 * raw.get(n);
        println!(
            "  n = {n:>2}  a_n = {:.6e}  n^2 a_n = {scaled:.6}",
            raw.get(n)
        );
    }

    let a = normalized_weights(2, 4096)?;
    println!("normalized K = 2 weights: {:?}", a.values());
    let zero = FinSet::singleton(0);
    let mut margins = Vec::new();
    for m in [2, 4, 8, 16] {
        let margin = injectivity_margin(&a, m, Some(&zero))?;
        println!("  support [-{m}, {m}] without 0: margin {margin:.6e}");
        margins.push(margin);
    }
    Ok(margins)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
