use nalgebra::DMatrix;
use num::complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Operator, Vector};
use crate::error::{Error, Result};

/// Two eigenvalue angles closer than this (as a fraction of a turn, measured
/// around the circle) belong to the same eigenspace.
pub const ANGLE_TOLERANCE: f64 = 1e-8;

/// One eigenspace of a unitary operator.
#[derive(Clone, Debug)]
pub struct Eigenspace {
    /// Eigenvalue `exp(2πi·angle)`, angle in `[0, 1)`.
    pub angle: f64,
    /// Orthonormal basis of the eigenspace.
    pub basis: Vec<Vector>,
}

impl Eigenspace {
    pub fn multiplicity(&self) -> usize {
        self.basis.len()
    }

    pub fn eigenvalue(&self) -> Complex64 {
        turn(self.angle)
    }

    /// Coordinates of `x` in the eigenspace basis, `E* x`.
    pub fn coordinates(&self, x: &Vector) -> Vec<Complex64> {
        self.basis.iter().map(|e| x.inner(e)).collect()
    }

    /// Orthogonal projection of `x` onto the eigenspace.
    pub fn project(&self, x: &Vector) -> Vector {
        let mut out = Vector::zeros(x.dim());
        for e in &self.basis {
            out = out.add(&e.scale(x.inner(e)));
        }
        out
    }
}

/// `exp(2πi·angle)`.
pub fn turn(angle: f64) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * angle)
}

/// Distance between two angles on the circle `R/Z`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

pub(crate) fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(1.0);
    if a >= 1.0 {
        0.0
    } else {
        a
    }
}

/// Eigenspaces of a unitary operator, sorted by angle.
///
/// A unitary matrix is normal, so its complex Schur form is diagonal and the
/// Schur vectors are an orthonormal eigenbasis. Eigenvalues are grouped into
/// eigenspaces by [`ANGLE_TOLERANCE`], wrapping around the point `1 ≡ 0`.
pub fn unitary_eigensystem(u: &Operator) -> Result<Vec<Eigenspace>> {
    u.ensure_unitary()?;
    let n = u.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let (q, t) = schur_unpacked(u)?;

    let mut order: Vec<(f64, usize)> = (0..n)
        .map(|i| (normalize_angle(t[(i, i)].arg() / std::f64::consts::TAU), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut clusters: Vec<Vec<(f64, usize)>> = Vec::new();
    for entry in order {
        match clusters.last_mut() {
            Some(last) if entry.0 - last.last().unwrap().0 <= ANGLE_TOLERANCE => last.push(entry),
            _ => clusters.push(vec![entry]),
        }
    }
    if clusters.len() > 1 {
        let first_min = clusters[0][0].0;
        let last_max = clusters.last().unwrap().last().unwrap().0;
        if first_min + 1.0 - last_max <= ANGLE_TOLERANCE {
            let tail = clusters.pop().unwrap();
            clusters[0].extend(tail);
        }
    }

    let mut spaces: Vec<Eigenspace> = clusters
        .into_iter()
        .map(|members| {
            // circular mean of the member eigenvalues
            let mean: Complex64 = members.iter().map(|&(a, _)| turn(a)).sum();
            let mut angle = normalize_angle(mean.arg() / std::f64::consts::TAU);
            if 1.0 - angle <= ANGLE_TOLERANCE {
                angle = 0.0;
            }
            let basis = members
                .iter()
                .map(|&(_, i)| Vector::from_dvector(q.column(i).into_owned()))
                .collect();
            Eigenspace { angle, basis }
        })
        .collect();
    spaces.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    Ok(spaces)
}

// The shifted QR iteration can stall on exactly structured input such as
// permutation matrices; a seeded random unitary change of basis breaks the
// structure without changing the spectrum.
fn schur_unpacked(u: &Operator) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let n = u.rows();
    let max_iterations = 200 * n.max(10);
    if let Some(schur) = u
        .as_matrix()
        .clone()
        .try_schur(f64::EPSILON, max_iterations)
    {
        return Ok(schur.unpack());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..8 {
        let w = Operator::random_unitary(n, &mut rng);
        let conjugated = w.adjoint().as_matrix() * u.as_matrix() * w.as_matrix();
        if let Some(schur) = conjugated.try_schur(f64::EPSILON, max_iterations) {
            let (q, t) = schur.unpack();
            return Ok((w.as_matrix() * q, t));
        }
    }
    Err(Error::NoConvergence)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(spaces: &[Eigenspace], n: usize) -> Operator {
        let mut acc = Operator::zeros(n, n);
        for space in spaces {
            let lambda = space.eigenvalue();
            for e in &space.basis {
                let p = Operator::from_fn(n, n, |i, j| e.get(i) * e.get(j).conj() * lambda);
                acc = acc.add(&p).unwrap();
            }
        }
        acc
    }

    #[test]
    fn identity_has_single_angle() {
        let spaces = unitary_eigensystem(&Operator::identity(2)).unwrap();
        assert_eq!(spaces.len(), 1);
        assert_eq!(spaces[0].angle, 0.0);
        assert_eq!(spaces[0].multiplicity(), 2);
    }

    #[test]
    fn reflection_splits_in_two() {
        let u = Operator::diagonal(&[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
        let spaces = unitary_eigensystem(&u).unwrap();
        let angles: Vec<f64> = spaces.iter().map(|s| s.angle).collect();
        assert!((angles[0]).abs() < 1e-14 && (angles[1] - 0.5).abs() < 1e-14);
        assert!(spaces.iter().all(|s| s.multiplicity() == 1));
    }

    #[test]
    fn cyclic_shift_matches_dft_basis() {
        let u = Operator::koopman_permutation(&[1, 2, 3, 0]);
        let spaces = unitary_eigensystem(&u).unwrap();
        let angles: Vec<f64> = spaces.iter().map(|s| s.angle).collect();
        for (a, expected) in angles.iter().zip([0.0, 0.25, 0.5, 0.75]) {
            assert!(circular_distance(*a, expected) < 1e-12, "{angles:?}");
        }
        // oracle: the DFT vector (e^{2πikx/4})_x is an eigenvector with eigenvalue e^{2πik/4}
        for (k, space) in spaces.iter().enumerate() {
            let dft =
                Vector::new((0..4).map(|x| turn((k * x) as f64 / 4.0) * 0.5).collect()).unwrap();
            let image = u.apply(&dft).unwrap();
            assert!(image.sub(&dft.scale(space.eigenvalue())).norm() < 1e-12);
            assert!((space.project(&dft).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_and_wraparound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = Operator::random_unitary(6, &mut rng);
        // angles near 0 and near 1 must merge into one eigenspace
        let d = Operator::diagonal(&[
            turn(0.0),
            turn(1.0 - 1e-12),
            turn(0.3),
            turn(0.3),
            turn(0.3),
            turn(0.71),
        ]);
        let u = q.compose(&d).unwrap().compose(&q.adjoint()).unwrap();
        let spaces = unitary_eigensystem(&u).unwrap();
        let mults: Vec<usize> = spaces.iter().map(|s| s.multiplicity()).collect();
        assert_eq!(mults, vec![2, 3, 1]);
        let err = reconstruct(&spaces, 6).sub(&u).unwrap().norm();
        assert!(err <= 1e-8, "reconstruction error {err}");
    }

    #[test]
    fn rejects_non_unitary_input() {
        let a = Operator::diagonal(&[Complex64::new(2.0, 0.0)]);
        assert!(matches!(
            unitary_eigensystem(&a),
            Err(Error::NotUnitary { .. })
        ));
        assert!(matches!(
            unitary_eigensystem(&Operator::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }
}
