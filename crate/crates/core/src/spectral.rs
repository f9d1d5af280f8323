//! Spectral measures and spectral profiles of finite-dimensional unitaries.
//!
//! For unitary `U` and a vector `x`, the spectral measure `σ_x` is the atomic
//! measure on the circle with `σ̂_x(n) = ∫ e^{2πint} dσ_x(t) = ⟨Uⁿx, x⟩`. Its
//! atoms sit at the eigenvalue angles and carry the masses `‖P_k x‖²`.
//! The finite stand-in for the maximal spectral type together with the
//! multiplicity function is the [`SpectralProfile`]: eigenvalue angles with
//! their eigenspace dimensions.

use std::collections::BTreeMap;

use num::complex::Complex64;
use num::integer::gcd;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    circular_distance, krylov_span, turn, unitary_eigensystem, Eigenspace, Operator, Vector,
    ANGLE_TOLERANCE,
};

pub const MASS_TOLERANCE: f64 = 1e-12;
pub const FOURIER_TOLERANCE: f64 = 1e-10;
pub const FOURIER_RANGE: i64 = 32;
pub const CERTIFICATE_TRIALS: usize = 64;
pub const INTERTWINING_TOLERANCE: f64 = 1e-8;
pub const MARGIN_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub angle: f64,
    pub mass: f64,
}

/// Positive atomic measure on the circle, angles in `[0, 1)` strictly increasing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    atoms: Vec<Atom>,
}

impl SpectralMeasure {
    /// Spectral measure of `x` given an eigensystem of the operator.
    pub fn from_eigensystem(spaces: &[Eigenspace], x: &Vector) -> Self {
        let atoms = spaces
            .iter()
            .map(|s| Atom {
                angle: s.angle,
                mass: s.coordinates(x).iter().map(Complex64::norm_sqr).sum(),
            })
            .filter(|a| a.mass >= MASS_TOLERANCE)
            .collect();
        Self { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// `σ̂(n) = Σ_k m_k e^{2πinθ_k}`.
    pub fn fourier_coefficient(&self, n: i64) -> Complex64 {
        self.atoms
            .iter()
            .map(|a| turn(n as f64 * a.angle) * a.mass)
            .sum()
    }

    pub fn to_complex(&self) -> CrossSpectralMeasure {
        CrossSpectralMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| ComplexAtom {
                    angle: a.angle,
                    mass: Complex64::new(a.mass, 0.0),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexAtom {
    pub angle: f64,
    pub mass: Complex64,
}

/// Complex atomic measure `σ_{x,y}` with `σ̂_{x,y}(n) = ⟨Uⁿx, y⟩`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossSpectralMeasure {
    atoms: Vec<ComplexAtom>,
}

impl CrossSpectralMeasure {
    pub fn from_eigensystem(spaces: &[Eigenspace], x: &Vector, y: &Vector) -> Self {
        let atoms = spaces
            .iter()
            .map(|s| {
                let cx = s.coordinates(x);
                let cy = s.coordinates(y);
                ComplexAtom {
                    angle: s.angle,
                    mass: cx.iter().zip(&cy).map(|(a, b)| a * b.conj()).sum(),
                }
            })
            .filter(|a| a.mass.norm() >= MASS_TOLERANCE)
            .collect();
        Self { atoms }
    }

    pub fn atoms(&self) -> &[ComplexAtom] {
        &self.atoms
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn fourier_coefficient(&self, n: i64) -> Complex64 {
        self.atoms
            .iter()
            .map(|a| turn(n as f64 * a.angle) * a.mass)
            .sum()
    }
}

/// `σ_x` for unitary `U`.
pub fn spectral_measure(u: &Operator, x: &Vector) -> Result<SpectralMeasure> {
    check_dim(u, x)?;
    Ok(SpectralMeasure::from_eigensystem(
        &unitary_eigensystem(u)?,
        x,
    ))
}

/// `σ_{x,y}` for unitary `U`.
pub fn cross_spectral_measure(
    u: &Operator,
    x: &Vector,
    y: &Vector,
) -> Result<CrossSpectralMeasure> {
    check_dim(u, x)?;
    check_dim(u, y)?;
    Ok(CrossSpectralMeasure::from_eigensystem(
        &unitary_eigensystem(u)?,
        x,
        y,
    ))
}

/// `max_{|n| ≤ range} |σ̂(n) − ⟨Uⁿx, y⟩|`, with the powers applied directly.
pub fn fourier_deviation(
    u: &Operator,
    x: &Vector,
    y: &Vector,
    measure: &CrossSpectralMeasure,
    range: i64,
) -> Result<f64> {
    check_dim(u, x)?;
    check_dim(u, y)?;
    let adjoint = u.adjoint();
    let mut worst = (measure.fourier_coefficient(0) - x.inner(y)).norm();
    for (op, sign) in [(u, 1), (&adjoint, -1)] {
        let mut v = x.clone();
        for n in 1..=range {
            v = op.apply(&v)?;
            worst = worst.max((measure.fourier_coefficient(sign * n) - v.inner(y)).norm());
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub angle: f64,
    pub multiplicity: usize,
}

/// Eigenvalue angles with eigenspace dimensions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfile {
    pub lines: Vec<SpectralLine>,
}

impl SpectralProfile {
    pub fn from_eigensystem(spaces: &[Eigenspace]) -> Self {
        Self {
            lines: spaces
                .iter()
                .map(|s| SpectralLine {
                    angle: s.angle,
                    multiplicity: s.multiplicity(),
                })
                .collect(),
        }
    }

    /// Profile of the Koopman operator of a permutation, read off its cycle
    /// structure: a cycle of length `L` contributes the angles `k/L`.
    pub fn from_permutation(perm: &[usize]) -> Self {
        let mut counts: BTreeMap<(u64, u64), usize> = BTreeMap::new();
        let mut seen = vec![false; perm.len()];
        for start in 0..perm.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0u64;
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                x = perm[x];
                len += 1;
            }
            for k in 0..len {
                let g = gcd(k, len);
                *counts.entry((k / g, len / g)).or_default() += 1;
            }
        }
        let mut lines: Vec<SpectralLine> = counts
            .into_iter()
            .map(|((p, q), multiplicity)| SpectralLine {
                angle: p as f64 / q as f64,
                multiplicity,
            })
            .collect();
        lines.sort_by(|a, b| a.angle.total_cmp(&b.angle));
        Self { lines }
    }

    pub fn dimension(&self) -> usize {
        self.lines.iter().map(|l| l.multiplicity).sum()
    }

    pub fn max_multiplicity(&self) -> usize {
        self.lines.iter().map(|l| l.multiplicity).max().unwrap_or(0)
    }

    /// Same lines up to [`ANGLE_TOLERANCE`] with equal multiplicities.
    pub fn matches(&self, other: &SpectralProfile) -> bool {
        self.lines.len() == other.lines.len()
            && self.lines.iter().zip(&other.lines).all(|(a, b)| {
                a.multiplicity == b.multiplicity
                    && circular_distance(a.angle, b.angle) <= ANGLE_TOLERANCE
            })
    }
}

pub fn spectral_profile(u: &Operator) -> Result<SpectralProfile> {
    Ok(SpectralProfile::from_eigensystem(&unitary_eigensystem(u)?))
}

/// Maximal spectral multiplicity with a cyclic-generator certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityCertificate {
    pub value: usize,
    /// `value` random vectors were found whose cyclic space is everything.
    pub certified: bool,
    pub trials_used: usize,
    pub seed: u64,
}

/// Largest eigenspace dimension, certified by finding that many Gaussian
/// random vectors that generate the whole space.
pub fn max_spectral_multiplicity(u: &Operator, seed: u64) -> Result<MultiplicityCertificate> {
    let profile = spectral_profile(u)?;
    let value = profile.max_multiplicity();
    let n = u.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials_used = 0;
    let mut certified = n == 0;
    while !certified && trials_used < CERTIFICATE_TRIALS {
        trials_used += 1;
        let generators: Vec<Vector> = (0..value).map(|_| Vector::random(n, &mut rng)).collect();
        certified = krylov_span(u, &generators)?.len() == n;
    }
    Ok(MultiplicityCertificate {
        value,
        certified,
        trials_used,
        seed,
    })
}

/// Every atom of `sigma1` lies on an atom of `sigma2`.
pub fn absolutely_continuous(sigma1: &SpectralMeasure, sigma2: &SpectralMeasure) -> bool {
    sigma1
        .atoms
        .iter()
        .filter(|a| a.mass >= MASS_TOLERANCE)
        .all(|a| {
            sigma2.atoms.iter().any(|b| {
                b.mass >= MASS_TOLERANCE && circular_distance(a.angle, b.angle) <= ANGLE_TOLERANCE
            })
        })
}

/// Equal spectral profiles.
pub fn spectrally_equivalent(u1: &Operator, u2: &Operator) -> Result<bool> {
    if u1.rows() != u2.rows() {
        return Ok(false);
    }
    Ok(spectral_profile(u1)?.matches(&spectral_profile(u2)?))
}

/// Outcome of [`certify_quasi_similarity`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiSimilarityReport {
    /// `‖V·U1 − U2·V‖`.
    pub residual_v: f64,
    /// `‖W·U2 − U1·W‖`.
    pub residual_w: f64,
    /// Dense-range margin of `V`.
    pub margin_v: f64,
    /// Dense-range margin of `W`.
    pub margin_w: f64,
    pub hypotheses_hold: bool,
    pub spectrally_equivalent: bool,
    pub certified: bool,
}

/// Checks that `V: H1 → H2` and `W: H2 → H1` are dense-range intertwiners of
/// `U1` and `U2` and, if so, that the two unitaries are spectrally equivalent.
pub fn certify_quasi_similarity(
    u1: &Operator,
    u2: &Operator,
    v: &Operator,
    w: &Operator,
) -> Result<QuasiSimilarityReport> {
    let residual_v = v.compose(u1)?.sub(&u2.compose(v)?)?.norm();
    let residual_w = w.compose(u2)?.sub(&u1.compose(w)?)?.norm();
    let margin_v = v.range_margin();
    let margin_w = w.range_margin();
    let hypotheses_hold = residual_v <= INTERTWINING_TOLERANCE
        && residual_w <= INTERTWINING_TOLERANCE
        && margin_v > MARGIN_TOLERANCE
        && margin_w > MARGIN_TOLERANCE;
    let equivalent = spectrally_equivalent(u1, u2)?;
    Ok(QuasiSimilarityReport {
        residual_v,
        residual_w,
        margin_v,
        margin_w,
        hypotheses_hold,
        spectrally_equivalent: equivalent,
        certified: hypotheses_hold && equivalent,
    })
}

/// Uniformly random permutation of `0..n`.
pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

/// A quasi-similar quadruple `(U1, U2, V, W)`.
///
/// `U1` is a random permutation unitary, `U2 = Q U1 Q*` for a random unitary
/// `Q`, `V = Q(I + εC)` and `W = (I + εC')Q*` where `C, C'` are random
/// polynomials in `U1` scaled so that `‖εC‖, ‖εC'‖ ≤ ½`.
pub fn quasi_similar_example<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<[Operator; 4]> {
    let u1 = Operator::koopman_permutation(&random_permutation(n, rng));
    let q = Operator::random_unitary(n, rng);
    let u2 = q.compose(&u1)?.compose(&q.adjoint())?;
    let id = Operator::identity(n);
    let mut perturbation = || -> Result<Operator> {
        let mut c = Operator::zeros(n, n);
        let mut power = Operator::identity(n);
        for _ in 0..n.min(4) {
            let coeff = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            c = c.add(&power.scale(coeff))?;
            power = power.compose(&u1)?;
        }
        let scale = 0.5 / c.norm().max(1.0);
        id.add(&c.scale(Complex64::new(scale, 0.0)))
    };
    let v = q.compose(&perturbation()?)?;
    let w = perturbation()?.compose(&q.adjoint())?;
    Ok([u1, u2, v, w])
}

fn check_dim(u: &Operator, x: &Vector) -> Result<()> {
    if u.cols() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.cols(),
            found: x.dim(),
        });
    }
    Ok(())
}
