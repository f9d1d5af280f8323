//! Spectral measures, profiles and a quasi-similarity certificate.

use quasi_similarity::hilbert::{Operator, Vector};
use quasi_similarity::spectral::{
    certify_quasi_similarity, fourier_deviation, max_spectral_multiplicity, quasi_similar_example,
    spectral_measure, spectral_profile,
};
use quasi_similarity::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<bool> {
    // a 3-cycle and a fixed point
    let u = Operator::koopman_permutation(&[1, 2, 0, 3]);
    let x = Vector::from_real(&[1.0, 0.0, 0.0, 1.0])?;
    let sigma = spectral_measure(&u, &x)?;
    for atom in sigma.atoms() {
        println!("atom at {:.6} with mass {:.6}", atom.angle, atom.mass);
    }
    println!(
        "Fourier deviation up to |n| = 32: {:.2e}",
        fourier_deviation(&u, &x, &x, &sigma.to_complex(), 32)?
    );

    let profile = spectral_profile(&u)?;
    let cert = max_spectral_multiplicity(&u, 1)?;
    println!(
        "{} lines, maximal multiplicity {} (certified: {})",
        profile.lines.len(),
        cert.value,
        cert.certified
    );

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let [u1, u2, v, w] = quasi_similar_example(8, &mut rng)?;
    let report = certify_quasi_similarity(&u1, &u2, &v, &w)?;
    println!(
        "V residual {:.2e}, W residual {:.2e}, range margins {:.3} / {:.3}, certified {}",
        report.residual_v, report.residual_w, report.margin_v, report.margin_w, report.certified
    );
    Ok(report.certified)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
