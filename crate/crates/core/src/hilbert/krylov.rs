use std::collections::VecDeque;

use super::{Operator, Vector};
use crate::error::{Error, Result};

// residual norm (relative to the candidate) below which a candidate adds no new direction
const RANK_TOLERANCE: f64 = 1e-8;

/// Orthonormal basis of the smallest `U`-invariant subspace containing the
/// generators (the cyclic space `Z(y_1, ..., y_m)`).
///
/// For unitary `U` on a finite-dimensional space this subspace is also
/// `U⁻¹`-invariant. Built by an Arnoldi-style sweep with two passes of
/// Gram-Schmidt per candidate.
pub fn krylov_span(u: &Operator, generators: &[Vector]) -> Result<Vec<Vector>> {
    u.ensure_unitary()?;
    let n = u.rows();
    if let Some(bad) = generators.iter().find(|g| g.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.dim(),
        });
    }

    let mut basis: Vec<Vector> = Vec::new();
    let mut queue: VecDeque<Vector> = generators.iter().cloned().collect();
    while let Some(candidate) = queue.pop_front() {
        if basis.len() == n {
            break;
        }
        let scale = candidate.norm();
        if scale == 0.0 {
            continue;
        }
        let mut w = candidate;
        for _ in 0..2 {
            for b in &basis {
                w = w.sub(&b.scale(w.inner(b)));
            }
        }
        let residual = w.norm();
        if residual > RANK_TOLERANCE * scale {
            let q = w.scale((1.0 / residual).into());
            queue.push_back(u.apply(&q)?);
            basis.push(q);
        }
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn orthonormality_defect(basis: &[Vector]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.inner(b) - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    #[test]
    fn identity_keeps_generator_line() {
        let span = krylov_span(&Operator::identity(3), &[Vector::basis(3, 0)]).unwrap();
        assert_eq!(span.len(), 1);
        assert!((span[0].get(0).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shift_orbit_spans_everything() {
        let u = Operator::koopman_permutation(&[1, 2, 3, 0]);
        let span = krylov_span(&u, &[Vector::basis(4, 0)]).unwrap();
        assert_eq!(span.len(), 4);
        // oracle: the 4 orbit vectors are the standard basis, rank 4
        let orbit: Vec<Vector> = (0..4)
            .map(|k| u.power(k).unwrap().apply(&Vector::basis(4, 0)).unwrap())
            .collect();
        let m = Operator::from_fn(4, 4, |i, j| orbit[j].get(i));
        assert!(m.min_singular_value() > 0.5);
        assert!(orthonormality_defect(&span) <= 1e-10);
    }

    #[test]
    fn zero_generator_gives_empty_basis() {
        let u = Operator::koopman_permutation(&[1, 0]);
        assert!(krylov_span(&u, &[Vector::zeros(2)]).unwrap().is_empty());
    }

    #[test]
    fn span_is_invariant_contains_generators_and_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let block = Operator::koopman_permutation(&[1, 2, 0]);
        let u = block.direct_sum(&block).direct_sum(&Operator::identity(1));
        let g1 = Vector::random(7, &mut rng);
        let g2 = Vector::random(7, &mut rng);
        let one = krylov_span(&u, &[g1.clone()]).unwrap();
        let two = krylov_span(&u, &[g1.clone(), g2]).unwrap();
        assert_eq!(one.len(), 3);
        assert_eq!(two.len(), 6);
        assert!(orthonormality_defect(&two) <= 1e-10);
        let project = |basis: &[Vector], v: &Vector| {
            let mut p = Vector::zeros(v.dim());
            for b in basis {
                p = p.add(&b.scale(v.inner(b)));
            }
            p
        };
        for b in &two {
            let ub = u.apply(b).unwrap();
            assert!(ub.sub(&project(&two, &ub)).norm() <= 1e-8);
        }
        assert!(g1.sub(&project(&one, &g1)).norm() <= 1e-8 * g1.norm());
    }
}
