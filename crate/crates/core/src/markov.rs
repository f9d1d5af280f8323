//! Markov operators between finite probability spaces.
//!
//! An operator `Φ: L²(p_in) → L²(p_out)` is Markov when it is a contraction,
//! maps nonnegative functions to nonnegative functions and fixes constants in
//! both directions, `Φ1 = 1 = Φ*1`. The adjoint is taken with respect to the
//! weighted inner products, so `(Φ*g)(x) = Σ_y conj(Φ[y][x]) p_out(y) g(y) / p_in(x)`.

use num::complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{LinearMap, Operator};

pub const CONSTANTS_TOLERANCE: f64 = 1e-12;
pub const POSITIVITY_TOLERANCE: f64 = 1e-12;
pub const NORM_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_TRIALS: usize = 100;

// above this many entries the norm is bounded with the Schur test instead of an SVD
const DENSE_NORM_LIMIT: usize = 1 << 20;

/// Outcome of [`verify_markov`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovReport {
    /// `max |Φ1 − 1|`.
    pub constants_deviation: f64,
    /// `max |Φ*1 − 1|`.
    pub adjoint_constants_deviation: f64,
    /// Smallest real part seen in `Φg` over the random nonnegative trials.
    pub min_image_entry: f64,
    /// Weighted operator norm (exact) or a certified upper bound for it.
    pub norm: f64,
    pub norm_is_exact: bool,
    pub trials: usize,
    pub constants_fixed: bool,
    pub adjoint_constants_fixed: bool,
    pub positivity_preserved: bool,
    pub contraction: bool,
}

impl MarkovReport {
    pub fn passed(&self) -> bool {
        self.constants_fixed
            && self.adjoint_constants_fixed
            && self.positivity_preserved
            && self.contraction
    }
}

/// Checks the Markov axioms for `op: L²(source) → L²(target)`.
///
/// Positivity is probed with `trials` random nonnegative functions drawn from
/// a ChaCha stream seeded with `seed`.
pub fn verify_markov<L: LinearMap + ?Sized>(
    op: &L,
    source: &[f64],
    target: &[f64],
    trials: usize,
    seed: u64,
) -> Result<MarkovReport> {
    check_measure(source, op.cols())?;
    check_measure(target, op.rows())?;

    let ones_in = vec![Complex64::new(1.0, 0.0); op.cols()];
    let ones_out = vec![Complex64::new(1.0, 0.0); op.rows()];
    let constants_deviation = max_deviation_from_one(&op.apply(&ones_in));
    let adjoint_ones = weighted_adjoint_apply(op, source, target, &ones_out);
    let adjoint_constants_deviation = max_deviation_from_one(&adjoint_ones);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_image_entry = f64::INFINITY;
    for _ in 0..trials {
        let g: Vec<Complex64> = (0..op.cols())
            .map(|_| Complex64::new(rng.random::<f64>(), 0.0))
            .collect();
        for z in op.apply(&g) {
            min_image_entry = min_image_entry.min(z.re);
        }
    }
    if trials == 0 || op.rows() == 0 {
        min_image_entry = 0.0;
    }

    let (norm, norm_is_exact) = if op.rows() * op.cols() <= DENSE_NORM_LIMIT {
        (weighted_norm(&op.to_dense(), source, target), true)
    } else {
        (schur_norm_bound(op, source, target), false)
    };

    Ok(MarkovReport {
        constants_deviation,
        adjoint_constants_deviation,
        min_image_entry,
        norm,
        norm_is_exact,
        trials,
        constants_fixed: constants_deviation <= CONSTANTS_TOLERANCE,
        adjoint_constants_fixed: adjoint_constants_deviation <= CONSTANTS_TOLERANCE,
        positivity_preserved: min_image_entry >= -POSITIVITY_TOLERANCE,
        contraction: norm <= 1.0 + NORM_TOLERANCE,
    })
}

/// Weighted adjoint action `Φ* g` for `Φ: L²(source) → L²(target)`.
pub fn weighted_adjoint_apply<L: LinearMap + ?Sized>(
    op: &L,
    source: &[f64],
    target: &[f64],
    g: &[Complex64],
) -> Vec<Complex64> {
    let scaled: Vec<Complex64> = g.iter().zip(target).map(|(z, p)| z * p).collect();
    op.apply_adjoint(&scaled)
        .into_iter()
        .zip(source)
        .map(|(z, p)| z / p)
        .collect()
}

/// Weighted adjoint as a dense matrix.
pub fn weighted_adjoint(op: &Operator, source: &[f64], target: &[f64]) -> Operator {
    Operator::from_fn(op.cols(), op.rows(), |x, y| {
        op.get(y, x).conj() * target[y] / source[x]
    })
}

/// Operator norm of `op: L²(source) → L²(target)`, i.e. the spectral norm of
/// `diag(√target) · op · diag(1/√source)`.
pub fn weighted_norm(op: &Operator, source: &[f64], target: &[f64]) -> f64 {
    let b = Operator::from_fn(op.rows(), op.cols(), |y, x| {
        op.get(y, x) * (target[y] / source[x]).sqrt()
    });
    b.norm()
}

/// Schur-test upper bound on the weighted norm using the test vectors
/// `√source` and `√target`: `‖Φ‖² ≤ max_y Σ_x |Φ[y][x]| · max_x Σ_y p_out(y)|Φ[y][x]| / p_in(x)`.
pub fn schur_norm_bound<L: LinearMap + ?Sized>(op: &L, source: &[f64], target: &[f64]) -> f64 {
    let mut row_sums = vec![0.0; op.rows()];
    let mut col_sums = vec![0.0; op.cols()];
    op.for_each_entry(&mut |r, c, v| {
        row_sums[r] += v.norm();
        col_sums[c] += target[r] * v.norm();
    });
    let r1 = row_sums.into_iter().fold(0.0, f64::max);
    let r2 = col_sums
        .into_iter()
        .zip(source)
        .map(|(s, p)| s / p)
        .fold(0.0, f64::max);
    (r1 * r2).sqrt()
}

/// The projection onto constants `f ↦ (Σ_x p_in(x) f(x)) · 1` as a map
/// `L²(source) → L²(target)`.
pub fn projection_onto_constants(source: &[f64], target_dim: usize) -> Operator {
    Operator::from_fn(target_dim, source.len(), |_, x| {
        Complex64::new(source[x], 0.0)
    })
}

/// A Markov candidate together with the measures of its domain and codomain.
#[derive(Clone, Debug)]
pub struct MarkovOperator {
    pub matrix: Operator,
    pub source: Vec<f64>,
    pub target: Vec<f64>,
}

impl MarkovOperator {
    pub fn new(matrix: Operator, source: Vec<f64>, target: Vec<f64>) -> Result<Self> {
        check_measure(&source, matrix.cols())?;
        check_measure(&target, matrix.rows())?;
        Ok(Self {
            matrix,
            source,
            target,
        })
    }

    pub fn verify(&self, trials: usize, seed: u64) -> Result<MarkovReport> {
        verify_markov(&self.matrix, &self.source, &self.target, trials, seed)
    }

    pub fn adjoint(&self) -> MarkovOperator {
        MarkovOperator {
            matrix: weighted_adjoint(&self.matrix, &self.source, &self.target),
            source: self.target.clone(),
            target: self.source.clone(),
        }
    }

    /// Weighted distance to the projection onto constants.
    pub fn distance_from_constants(&self) -> f64 {
        let pi = projection_onto_constants(&self.source, self.matrix.rows());
        let diff = self.matrix.sub(&pi).expect("same shape");
        weighted_norm(&diff, &self.source, &self.target)
    }

    /// Margin certifying dense range (surjectivity) in the weighted spaces.
    pub fn range_margin(&self) -> f64 {
        let b = Operator::from_fn(self.matrix.rows(), self.matrix.cols(), |y, x| {
            self.matrix.get(y, x) * (self.target[y] / self.source[x]).sqrt()
        });
        b.range_margin()
    }
}

fn max_deviation_from_one(values: &[Complex64]) -> f64 {
    values
        .iter()
        .map(|z| (z - Complex64::new(1.0, 0.0)).norm())
        .fold(0.0, f64::max)
}

fn check_measure(p: &[f64], dim: usize) -> Result<()> {
    if p.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: p.len(),
        });
    }
    if p.iter().any(|&w| w <= 0.0 || !w.is_finite()) {
        return Err(Error::NotMarkov(
            "measure weights must be strictly positive".into(),
        ));
    }
    Ok(())
}
