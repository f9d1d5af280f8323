//! Finite-dimensional complex Hilbert spaces and operators on them.
//!
//! [`Operator`] is a dense complex matrix backed by `nalgebra`; [`Vector`] is a
//! dense complex vector. Inner products are linear in the first argument,
//! `<x, y> = sum_i x_i conj(y_i)`.

mod eigen;
mod krylov;
mod sparse;

pub use eigen::{circular_distance, turn, unitary_eigensystem, Eigenspace, ANGLE_TOLERANCE};
pub use krylov::krylov_span;
pub use sparse::{LinearMap, SparseOperator};

use nalgebra::{DMatrix, DVector};
use num::complex::Complex64;
use num::Zero;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Tolerance used by [`Operator::is_unitary`] and the unitarity preconditions.
pub const UNITARY_TOLERANCE: f64 = 1e-10;

/// Dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: DMatrix<Complex64>,
}

impl Operator {
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        if let Some(index) = entries
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            mat: DMatrix::from_row_slice(rows, cols, &entries),
        })
    }

    pub fn from_real_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::from_row_major(
            rows,
            cols,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self {
            mat: DMatrix::from_fn(rows, cols, f),
        }
    }

    pub fn from_matrix(mat: DMatrix<Complex64>) -> Self {
        Self { mat }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            mat: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: DMatrix::identity(n, n),
        }
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                entries[i]
            } else {
                Complex64::zero()
            }
        })
    }

    /// Koopman matrix of a permutation: `(U f)(x) = f(perm[x])`.
    pub fn koopman_permutation(perm: &[usize]) -> Self {
        let n = perm.len();
        let mut mat = DMatrix::zeros(n, n);
        for (x, &y) in perm.iter().enumerate() {
            mat[(x, y)] = Complex64::new(1.0, 0.0);
        }
        Self { mat }
    }

    /// Random unitary from the QR factorization of a complex Gaussian matrix.
    pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let g = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
        let qr = g.qr();
        let (q, r) = (qr.q(), qr.r());
        // fix the phases so the distribution does not depend on the QR sign convention
        let phases: Vec<Complex64> = (0..n)
            .map(|i| {
                let d = r[(i, i)];
                if d.norm() > 0.0 {
                    d / d.norm()
                } else {
                    Complex64::new(1.0, 0.0)
                }
            })
            .collect();
        Self::from_fn(n, n, |i, j| q[(i, j)] * phases[j])
    }

    /// Matrix with independent standard complex Gaussian entries.
    pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Self::from_fn(rows, cols, |_, _| gaussian(rng))
    }

    pub fn rows(&self) -> usize {
        self.mat.nrows()
    }

    pub fn cols(&self) -> usize {
        self.mat.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.mat[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.mat[(row, col)] = value;
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn entries_row_major(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.mat[(i, j)]);
            }
        }
        out
    }

    pub fn column(&self, col: usize) -> Vector {
        Vector(self.mat.column(col).into_owned())
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
        }
    }

    /// `self ∘ rhs`.
    pub fn compose(&self, rhs: &Operator) -> Result<Self> {
        if self.cols() != rhs.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                found: rhs.rows(),
            });
        }
        Ok(Self {
            mat: &self.mat * &rhs.mat,
        })
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        if self.cols() != x.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                found: x.dim(),
            });
        }
        Ok(Vector(&self.mat * &x.0))
    }

    pub fn add(&self, rhs: &Operator) -> Result<Self> {
        self.check_same_shape(rhs)?;
        Ok(Self {
            mat: &self.mat + &rhs.mat,
        })
    }

    pub fn sub(&self, rhs: &Operator) -> Result<Self> {
        self.check_same_shape(rhs)?;
        Ok(Self {
            mat: &self.mat - &rhs.mat,
        })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            mat: &self.mat * factor,
        }
    }

    /// Block-diagonal sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &Operator) -> Self {
        let (r1, c1) = (self.rows(), self.cols());
        let mut mat = DMatrix::zeros(r1 + other.rows(), c1 + other.cols());
        mat.view_mut((0, 0), (r1, c1)).copy_from(&self.mat);
        mat.view_mut((r1, c1), (other.rows(), other.cols()))
            .copy_from(&other.mat);
        Self { mat }
    }

    /// Integer power; negative exponents use the adjoint, so they are only
    /// meaningful for unitary operators.
    pub fn power(&self, exponent: i64) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows(),
                cols: self.cols(),
            });
        }
        let base = if exponent < 0 {
            self.adjoint()
        } else {
            self.clone()
        };
        let mut acc = Self::identity(self.rows());
        for _ in 0..exponent.unsigned_abs() {
            acc.mat = &acc.mat * &base.mat;
        }
        Ok(acc)
    }

    /// Singular values in descending order; `min(rows, cols)` of them.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.rows() == 0 || self.cols() == 0 {
            return Vec::new();
        }
        let mut values: Vec<f64> = self
            .mat
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        values.sort_by(|a, b| b.total_cmp(a));
        values
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Smallest singular value, treating a wide or tall matrix as having
    /// `min(rows, cols)` singular values.
    pub fn min_singular_value(&self) -> f64 {
        self.singular_values().last().copied().unwrap_or(0.0)
    }

    /// Margin certifying surjectivity: zero when there are more rows than
    /// columns, otherwise the smallest singular value.
    pub fn range_margin(&self) -> f64 {
        if self.rows() > self.cols() {
            0.0
        } else {
            self.min_singular_value()
        }
    }

    /// Margin certifying injectivity: zero when there are more columns than
    /// rows, otherwise the smallest singular value.
    pub fn injectivity_margin(&self) -> f64 {
        if self.cols() > self.rows() {
            0.0
        } else {
            self.min_singular_value()
        }
    }

    /// `‖U U* − I‖` in the spectral norm.
    pub fn unitarity_defect(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows(),
                cols: self.cols(),
            });
        }
        let gram = &self.mat * self.mat.adjoint()
            - DMatrix::<Complex64>::identity(self.rows(), self.rows());
        Ok(Operator { mat: gram }.norm())
    }

    pub fn is_unitary(&self) -> bool {
        matches!(self.unitarity_defect(), Ok(d) if d <= UNITARY_TOLERANCE)
    }

    pub(crate) fn ensure_unitary(&self) -> Result<()> {
        let defect = self.unitarity_defect()?;
        if defect > UNITARY_TOLERANCE {
            return Err(Error::NotUnitary { defect });
        }
        Ok(())
    }

    fn check_same_shape(&self, rhs: &Operator) -> Result<()> {
        if self.rows() != rhs.rows() || self.cols() != rhs.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.rows() * self.cols(),
                found: rhs.rows() * rhs.cols(),
            });
        }
        Ok(())
    }
}

/// Dense complex vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector(DVector<Complex64>);

impl Vector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if let Some(index) = entries
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(DVector::from_vec(entries)))
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        Self(v)
    }

    /// Vector with independent standard complex Gaussian entries.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self(DVector::from_fn(dim, |_, _| gaussian(rng)))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        self.0.as_slice()
    }

    pub fn get(&self, i: usize) -> Complex64 {
        self.0[i]
    }

    /// `<self, other>`, linear in `self`.
    pub fn inner(&self, other: &Vector) -> Complex64 {
        other.0.dotc(&self.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn add(&self, other: &Vector) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Vector) -> Self {
        Self(&self.0 - &other.0)
    }

    pub(crate) fn from_dvector(v: DVector<Complex64>) -> Self {
        Self(v)
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(Operator::identity(3).adjoint(), Operator::identity(3));
        let d = Operator::diagonal(&[c(0.0, 1.0)]);
        assert_eq!(d.adjoint(), Operator::diagonal(&[c(0.0, -1.0)]));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Operator::random_gaussian(3, 3, &mut rng);
        assert_eq!(a.adjoint().adjoint(), a);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a.adjoint().get(i, j), a.get(j, i).conj());
            }
        }
    }

    #[test]
    fn rejects_non_finite_entries() {
        let err = Operator::from_row_major(1, 2, vec![c(1.0, 0.0), c(f64::NAN, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1 }));
        assert!(Vector::new(vec![c(f64::INFINITY, 0.0)]).is_err());
    }

    #[test]
    fn singular_value_examples() {
        assert_eq!(Operator::identity(4).singular_values(), vec![1.0; 4]);
        let d = Operator::diagonal(&[c(3.0, 0.0), c(0.0, 0.0)]);
        let sv = d.singular_values();
        assert!((sv[0] - 3.0).abs() < 1e-14 && sv[1].abs() < 1e-14);
        let wide = Operator::zeros(2, 5);
        assert_eq!(wide.singular_values().len(), 2);
        assert_eq!(wide.injectivity_margin(), 0.0);
    }

    #[test]
    fn singular_values_match_gram_eigenvalues() {
        // independent route: Hermitian eigen-solve of A* A
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = Operator::random_gaussian(4, 4, &mut rng);
        let gram = a.adjoint().compose(&a).unwrap();
        let mut eig: Vec<f64> = gram
            .as_matrix()
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|l| l.max(0.0).sqrt())
            .collect();
        eig.sort_by(|x, y| y.total_cmp(x));
        for (s, e) in a.singular_values().iter().zip(&eig) {
            assert!((s - e).abs() <= 1e-10 * s.max(1.0), "{s} vs {e}");
        }
    }

    #[test]
    fn norm_bounds_action_and_unitary_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = Operator::random_gaussian(5, 3, &mut rng);
        let smax = a.norm();
        for _ in 0..20 {
            let x = Vector::random(3, &mut rng);
            assert!(a.apply(&x).unwrap().norm() <= smax * x.norm() * (1.0 + 1e-10));
        }
        let u = Operator::random_unitary(6, &mut rng);
        assert!(u.is_unitary());
        for s in u.singular_values() {
            assert!((s - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn direct_sum_and_power() {
        let u = Operator::koopman_permutation(&[1, 2, 0]);
        let s = u.direct_sum(&Operator::identity(2));
        assert_eq!((s.rows(), s.cols()), (5, 5));
        assert_eq!(s.get(3, 3), c(1.0, 0.0));
        assert_eq!(u.power(3).unwrap(), Operator::identity(3));
        assert_eq!(u.power(-1).unwrap(), u.adjoint());
    }
}
