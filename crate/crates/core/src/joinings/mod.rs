//! Finite measure-preserving systems, their joinings and the Markov
//! operators they induce.
//!
//! A joining `λ` of `(X₁, T₁, p₁)` and `(X₂, T₂, p₂)` gives
//! `(Φf)(y) = Σ_x λ(x, y) f(x) / p₂(y)`, a Markov operator with
//! `⟨Φf, g⟩_{p₂} = Σ λ(x, y) f(x) conj(g(y))` and `Φ U_{T₁} = U_{T₂} Φ`.
//! Koopman operators act by `(U_T f)(x) = f(T x)`.

mod exact;

use std::collections::HashSet;

use num::complex::Complex64;
use num::{BigRational, One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use exact::{nullspace, parse_rational, rank, to_f64};

use crate::error::{Error, Result};
use crate::hilbert::Operator;
use crate::markov::{
    projection_onto_constants, verify_markov, weighted_norm, MarkovOperator, MarkovReport,
};

pub const JOINING_TOLERANCE: f64 = 1e-12;
pub const PROBABILITY_TOLERANCE: f64 = 1e-15;
pub const NONTRIVIALITY_TOLERANCE: f64 = 1e-10;
pub const RANDOM_PROBES: usize = 32;

/// `(X, T, p)` with `X = {0, …, n−1}`, `T x = perm[x]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMps {
    perm: Vec<usize>,
    p: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

impl FiniteMps {
    pub fn new(perm: Vec<usize>, p: Vec<f64>) -> Result<Self> {
        check_permutation(&perm)?;
        if p.len() != perm.len() {
            return Err(Error::DimensionMismatch {
                expected: perm.len(),
                found: p.len(),
            });
        }
        if let Some(x) = p.iter().position(|&v| v <= 0.0 || !v.is_finite()) {
            return Err(Error::System(format!(
                "p({x}) = {} is not strictly positive",
                p[x]
            )));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::System(format!("p sums to {total}")));
        }
        for x in 0..perm.len() {
            if (p[perm[x]] - p[x]).abs() > PROBABILITY_TOLERANCE {
                return Err(Error::System(format!("p is not invariant at {x}")));
            }
        }
        Ok(Self {
            perm,
            p,
            exact: None,
        })
    }

    /// A system with rational probabilities, checked exactly.
    pub fn exact(perm: Vec<usize>, p: Vec<BigRational>) -> Result<Self> {
        check_permutation(&perm)?;
        if p.len() != perm.len() {
            return Err(Error::DimensionMismatch {
                expected: perm.len(),
                found: p.len(),
            });
        }
        if let Some(x) = p.iter().position(|v| !v.is_positive()) {
            return Err(Error::System(format!(
                "p({x}) = {} is not strictly positive",
                p[x]
            )));
        }
        let total: BigRational = p.iter().sum();
        if !total.is_one() {
            return Err(Error::System(format!("p sums to {total}")));
        }
        if (0..perm.len()).any(|x| p[perm[x]] != p[x]) {
            return Err(Error::System("p is not invariant".into()));
        }
        Ok(Self {
            perm,
            p: p.iter().map(to_f64).collect(),
            exact: Some(p),
        })
    }

    /// Parses probabilities given as decimal or `a/b` strings.
    pub fn parse(perm: Vec<usize>, p: &[String]) -> Result<Self> {
        let values = p
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>>>()?;
        Self::exact(perm, values)
    }

    /// `x ↦ x + 1 mod n` with uniform measure.
    pub fn rotation(n: usize) -> Result<Self> {
        Self::uniform((0..n).map(|x| (x + 1) % n.max(1)).collect())
    }

    pub fn uniform(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        if n == 0 {
            return Err(Error::System("empty system".into()));
        }
        Self::exact(perm, vec![BigRational::new(1.into(), n.into()); n])
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn exact_p(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn koopman(&self) -> Operator {
        Operator::koopman_permutation(&self.perm)
    }

    /// Every point lies on a single cycle.
    pub fn is_ergodic(&self) -> bool {
        let mut x = self.perm[0];
        let mut steps = 1;
        while x != 0 {
            x = self.perm[x];
            steps += 1;
        }
        steps == self.len()
    }
}

fn check_permutation(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &y in perm {
        if y >= perm.len() || std::mem::replace(&mut seen[y], true) {
            return Err(Error::System(format!("{perm:?} is not a permutation")));
        }
    }
    Ok(())
}

/// Wire format of a system: probabilities as decimal or rational strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub n: usize,
    pub permutation: Vec<usize>,
    pub p: Vec<String>,
}

impl TryFrom<SystemSpec> for FiniteMps {
    type Error = Error;

    fn try_from(spec: SystemSpec) -> Result<Self> {
        if spec.permutation.len() != spec.n {
            return Err(Error::DimensionMismatch {
                expected: spec.n,
                found: spec.permutation.len(),
            });
        }
        FiniteMps::parse(spec.permutation, &spec.p)
    }
}

/// `λ(x, y)` stored row-major with `x` indexing rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JoiningMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl JoiningMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let values = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        Self { rows, cols, values }
    }

    /// `p₁ ⊗ p₂`.
    pub fn product(sys1: &FiniteMps, sys2: &FiniteMps) -> Self {
        Self::from_fn(sys1.len(), sys2.len(), |x, y| sys1.p[x] * sys2.p[y])
    }

    /// `λ(x, x) = p(x)`.
    pub fn diagonal(sys: &FiniteMps) -> Self {
        Self::from_fn(
            sys.len(),
            sys.len(),
            |x, y| if x == y { sys.p[x] } else { 0.0 },
        )
    }

    /// `λ(x, π(x)) = p₁(x)`.
    pub fn graph(pi: &[usize], sys1: &FiniteMps, target_len: usize) -> Self {
        Self::from_fn(sys1.len(), target_len, |x, y| {
            if pi[x] == y {
                sys1.p[x]
            } else {
                0.0
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[x * self.cols + y]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(1 − t)·self + t·other`.
    pub fn mix(&self, other: &JoiningMatrix, t: f64) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                found: other.values.len(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        Ok(Self { values, ..*self })
    }

    pub fn max_abs_diff(&self, other: &JoiningMatrix) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Per-check outcome of [`validate_joining`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JoiningValidation {
    pub shape_matches: bool,
    pub min_entry: f64,
    pub row_marginal_defect: f64,
    pub column_marginal_defect: f64,
    pub invariance_defect: f64,
    pub nonnegative: bool,
    pub row_marginal: bool,
    pub column_marginal: bool,
    pub invariant: bool,
}

impl JoiningValidation {
    pub fn valid(&self) -> bool {
        self.shape_matches
            && self.nonnegative
            && self.row_marginal
            && self.column_marginal
            && self.invariant
    }
}

pub fn validate_joining(
    lam: &JoiningMatrix,
    sys1: &FiniteMps,
    sys2: &FiniteMps,
) -> JoiningValidation {
    if (lam.rows, lam.cols) != (sys1.len(), sys2.len()) {
        return JoiningValidation {
            shape_matches: false,
            min_entry: f64::NAN,
            row_marginal_defect: f64::INFINITY,
            column_marginal_defect: f64::INFINITY,
            invariance_defect: f64::INFINITY,
            nonnegative: false,
            row_marginal: false,
            column_marginal: false,
            invariant: false,
        };
    }
    let min_entry = lam.values.iter().copied().fold(f64::INFINITY, f64::min);
    let row_marginal_defect = (0..lam.rows)
        .map(|x| ((0..lam.cols).map(|y| lam.get(x, y)).sum::<f64>() - sys1.p[x]).abs())
        .fold(0.0, f64::max);
    let column_marginal_defect = (0..lam.cols)
        .map(|y| ((0..lam.rows).map(|x| lam.get(x, y)).sum::<f64>() - sys2.p[y]).abs())
        .fold(0.0, f64::max);
    let mut invariance_defect: f64 = 0.0;
    for x in 0..lam.rows {
        for y in 0..lam.cols {
            invariance_defect =
                invariance_defect.max((lam.get(sys1.perm[x], sys2.perm[y]) - lam.get(x, y)).abs());
        }
    }
    JoiningValidation {
        shape_matches: true,
        min_entry,
        row_marginal_defect,
        column_marginal_defect,
        invariance_defect,
        nonnegative: min_entry >= -JOINING_TOLERANCE,
        row_marginal: row_marginal_defect <= JOINING_TOLERANCE,
        column_marginal: column_marginal_defect <= JOINING_TOLERANCE,
        invariant: invariance_defect <= JOINING_TOLERANCE,
    }
}

fn require_valid(lam: &JoiningMatrix, sys1: &FiniteMps, sys2: &FiniteMps) -> Result<()> {
    let report = validate_joining(lam, sys1, sys2);
    if report.valid() {
        Ok(())
    } else {
        Err(Error::Joining(format!("{report:?}")))
    }
}

/// `(Φf)(y) = Σ_x λ(x, y) f(x) / p₂(y)` as a map `L²(p₁) → L²(p₂)`.
pub fn markov_from_joining(
    lam: &JoiningMatrix,
    sys1: &FiniteMps,
    sys2: &FiniteMps,
) -> Result<MarkovOperator> {
    require_valid(lam, sys1, sys2)?;
    let matrix = Operator::from_fn(sys2.len(), sys1.len(), |y, x| {
        Complex64::new(lam.get(x, y) / sys2.p[y], 0.0)
    });
    MarkovOperator::new(matrix, sys1.p.clone(), sys2.p.clone())
}

/// `‖Φ U_{T₁} − U_{T₂} Φ‖` as the largest entry of the difference.
pub fn equivariance_defect(phi: &Operator, sys1: &FiniteMps, sys2: &FiniteMps) -> Result<f64> {
    let lhs = phi.compose(&sys1.koopman())?;
    let rhs = sys2.koopman().compose(phi)?;
    Ok(lhs.sub(&rhs)?.max_abs_entry())
}

/// Largest deviation in `⟨Φ e_x, e_y⟩_{p₂} = λ(x, y)` over all basis pairs.
pub fn pairing_defect(phi: &Operator, lam: &JoiningMatrix, sys2: &FiniteMps) -> f64 {
    let mut worst: f64 = 0.0;
    for x in 0..lam.rows {
        for y in 0..lam.cols {
            worst = worst.max((phi.get(y, x) * sys2.p[y] - lam.get(x, y)).norm());
        }
    }
    worst
}

/// Inverse of [`markov_from_joining`]: `λ(x, y) = p₂(y)·(Φ 1_x)(y)`.
pub fn joining_from_markov(
    phi: &Operator,
    sys1: &FiniteMps,
    sys2: &FiniteMps,
) -> Result<JoiningMatrix> {
    if (phi.rows(), phi.cols()) != (sys2.len(), sys1.len()) {
        return Err(Error::DimensionMismatch {
            expected: sys2.len() * sys1.len(),
            found: phi.rows() * phi.cols(),
        });
    }
    let report = verify_markov(phi, &sys1.p, &sys2.p, crate::markov::DEFAULT_TRIALS, 0)?;
    if !report.passed() {
        return Err(Error::NotMarkov(format!("{report:?}")));
    }
    let defect = equivariance_defect(phi, sys1, sys2)?;
    if defect > JOINING_TOLERANCE {
        return Err(Error::NotMarkov(format!(
            "not equivariant (defect {defect:e})"
        )));
    }
    let mut lam = Vec::with_capacity(sys1.len() * sys2.len());
    for x in 0..sys1.len() {
        for y in 0..sys2.len() {
            let z = phi.get(y, x) * sys2.p[y];
            if z.im.abs() > JOINING_TOLERANCE {
                return Err(Error::NotMarkov(format!("entry ({y}, {x}) is not real")));
            }
            lam.push(z.re);
        }
    }
    let lam = JoiningMatrix::new(sys1.len(), sys2.len(), lam)?;
    require_valid(&lam, sys1, sys2)?;
    Ok(lam)
}

/// Orbits of `(x, y) ↦ (T₁x, T₂y)`: invariant joinings are constant on them.
fn product_orbits(sys1: &FiniteMps, sys2: &FiniteMps) -> (Vec<usize>, usize) {
    let (n1, n2) = (sys1.len(), sys2.len());
    let mut orbit = vec![usize::MAX; n1 * n2];
    let mut count = 0;
    for start in 0..n1 * n2 {
        if orbit[start] != usize::MAX {
            continue;
        }
        let (mut x, mut y) = (start / n2, start % n2);
        while orbit[x * n2 + y] == usize::MAX {
            orbit[x * n2 + y] = count;
            x = sys1.perm[x];
            y = sys2.perm[y];
        }
        count += 1;
    }
    (orbit, count)
}

/// Homogeneous constraints (zero marginals) in orbit variables, plus
/// `λ(x, y) = 0` for every pinned cell.
fn homogeneous_system(
    sys1: &FiniteMps,
    sys2: &FiniteMps,
    pinned: &[usize],
) -> (Vec<Vec<BigRational>>, Vec<usize>, usize) {
    let (n1, n2) = (sys1.len(), sys2.len());
    let (orbit, count) = product_orbits(sys1, sys2);
    let mut rows = Vec::new();
    let zero = BigRational::zero();
    for x in 0..n1 {
        let mut row = vec![zero.clone(); count];
        for y in 0..n2 {
            row[orbit[x * n2 + y]] += BigRational::one();
        }
        rows.push(row);
    }
    for y in 0..n2 {
        let mut row = vec![zero.clone(); count];
        for x in 0..n1 {
            row[orbit[x * n2 + y]] += BigRational::one();
        }
        rows.push(row);
    }
    let pinned_orbits: HashSet<usize> = pinned.iter().map(|&c| orbit[c]).collect();
    for o in pinned_orbits {
        let mut row = vec![zero.clone(); count];
        row[o] = BigRational::one();
        rows.push(row);
    }
    (rows, orbit, count)
}

fn expand(orbit: &[usize], v: &[BigRational]) -> Vec<BigRational> {
    orbit.iter().map(|&o| v[o].clone()).collect()
}

/// All joinings: `product + span(basis)` intersected with `λ ≥ 0`.
#[derive(Clone, Debug)]
pub struct JoiningSpace {
    pub rows: usize,
    pub cols: usize,
    /// Dimension of the homogeneous solution space; 0 certifies disjointness.
    pub dimension: usize,
    pub particular: JoiningMatrix,
    /// Exact rational particular solution when both measures are rational.
    pub exact_particular: Option<Vec<BigRational>>,
    /// Homogeneous directions, row-major `n₁ × n₂`, exact.
    pub basis: Vec<Vec<BigRational>>,
}

impl JoiningSpace {
    pub fn basis_f64(&self) -> Vec<JoiningMatrix> {
        self.basis
            .iter()
            .map(|b| {
                JoiningMatrix::new(self.rows, self.cols, b.iter().map(to_f64).collect())
                    .expect("shape")
            })
            .collect()
    }

    pub fn is_disjoint(&self) -> bool {
        self.dimension == 0
    }
}

/// Solves the marginal and invariance constraints.
///
/// The homogeneous constraints have integer coefficients, so the solution
/// space is computed in exact rational arithmetic whatever the measures are.
pub fn joining_space(sys1: &FiniteMps, sys2: &FiniteMps) -> JoiningSpace {
    let (rows, orbit, count) = homogeneous_system(sys1, sys2, &[]);
    let basis: Vec<Vec<BigRational>> = nullspace(&rows, count)
        .iter()
        .map(|v| expand(&orbit, v))
        .collect();
    let exact_particular = match (&sys1.exact, &sys2.exact) {
        (Some(p1), Some(p2)) => Some(
            p1.iter()
                .flat_map(|a| p2.iter().map(move |b| a * b))
                .collect(),
        ),
        _ => None,
    };
    JoiningSpace {
        rows: sys1.len(),
        cols: sys2.len(),
        dimension: basis.len(),
        particular: JoiningMatrix::product(sys1, sys2),
        exact_particular,
        basis,
    }
}

/// Extreme-point test for a valid joining.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndecomposabilityReport {
    /// Dimension of the homogeneous directions vanishing on the zero set of `λ`.
    pub free_directions: usize,
    pub active_cells: usize,
    pub probes: usize,
    /// Probes along which both `λ ± εd` stay feasible for some `ε > 0`.
    pub two_sided_probes: usize,
    pub extreme: bool,
}

/// `λ` is extreme iff no nonzero homogeneous direction vanishes on every cell
/// where `λ = 0`. The rank test decides; the seeded probes along the basis and
/// [`RANDOM_PROBES`] random combinations are reported alongside.
pub fn indecomposability(
    lam: &JoiningMatrix,
    sys1: &FiniteMps,
    sys2: &FiniteMps,
    seed: u64,
) -> Result<IndecomposabilityReport> {
    require_valid(lam, sys1, sys2)?;
    let active: Vec<usize> = (0..lam.values.len())
        .filter(|&c| lam.values[c] <= JOINING_TOLERANCE)
        .collect();
    let (rows, _, count) = homogeneous_system(sys1, sys2, &active);
    let free_directions = nullspace(&rows, count).len();

    let space = joining_space(sys1, sys2);
    let directions = space.basis_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes: Vec<Vec<f64>> = directions.iter().map(|d| d.values.clone()).collect();
    if !directions.is_empty() {
        for _ in 0..RANDOM_PROBES {
            let coeffs: Vec<f64> = directions
                .iter()
                .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                .collect();
            probes.push(
                (0..lam.values.len())
                    .map(|c| {
                        directions
                            .iter()
                            .zip(&coeffs)
                            .map(|(d, w)| w * d.values[c])
                            .sum()
                    })
                    .collect(),
            );
        }
    }
    let two_sided_probes = probes
        .par_iter()
        .filter(|d| {
            let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            scale > 0.0
                && active
                    .iter()
                    .all(|&c| d[c].abs() <= JOINING_TOLERANCE * scale)
        })
        .count();
    Ok(IndecomposabilityReport {
        free_directions,
        active_cells: active.len(),
        probes: probes.len(),
        two_sided_probes,
        extreme: free_directions == 0,
    })
}

pub fn is_indecomposable(lam: &JoiningMatrix, sys1: &FiniteMps, sys2: &FiniteMps) -> Result<bool> {
    Ok(indecomposability(lam, sys1, sys2, 0)?.extreme)
}

/// A point of the joining polytope: the product moved a random fraction of
/// the way to the boundary along a random homogeneous direction.
pub fn random_joining<R: Rng + ?Sized>(space: &JoiningSpace, rng: &mut R) -> JoiningMatrix {
    let directions = space.basis_f64();
    if directions.is_empty() {
        return space.particular.clone();
    }
    let coeffs: Vec<f64> = directions
        .iter()
        .map(|_| rng.random::<f64>() * 2.0 - 1.0)
        .collect();
    let d: Vec<f64> = (0..space.particular.values.len())
        .map(|c| {
            directions
                .iter()
                .zip(&coeffs)
                .map(|(b, w)| w * b.values[c])
                .sum()
        })
        .collect();
    let t = max_step(&space.particular.values, &d) * rng.random::<f64>();
    let values = space
        .particular
        .values
        .iter()
        .zip(&d)
        .map(|(p, v)| p + t * v)
        .collect();
    JoiningMatrix {
        values,
        ..space.particular.clone()
    }
}

fn max_step(point: &[f64], d: &[f64]) -> f64 {
    point
        .iter()
        .zip(d)
        .filter(|(_, v)| **v < 0.0)
        .map(|(p, v)| (p / -v).max(0.0))
        .fold(f64::INFINITY, f64::min)
}

/// Walks from the product to a vertex of the joining polytope, each step
/// moving along a random direction of the current face until a new cell
/// reaches zero.
pub fn random_vertex<R: Rng + ?Sized>(
    sys1: &FiniteMps,
    sys2: &FiniteMps,
    rng: &mut R,
) -> JoiningMatrix {
    let mut lam = JoiningMatrix::product(sys1, sys2);
    let mut active: Vec<usize> = Vec::new();
    loop {
        let (rows, orbit, count) = homogeneous_system(sys1, sys2, &active);
        let face: Vec<Vec<f64>> = nullspace(&rows, count)
            .iter()
            .map(|v| expand(&orbit, v).iter().map(to_f64).collect())
            .collect();
        if face.is_empty() {
            return lam;
        }
        let coeffs: Vec<f64> = face
            .iter()
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        let d: Vec<f64> = (0..lam.values.len())
            .map(|c| face.iter().zip(&coeffs).map(|(b, w)| w * b[c]).sum())
            .collect();
        let t = max_step(&lam.values, &d);
        if !t.is_finite() {
            // a direction with no negative entry is zero since entries sum to 0
            return lam;
        }
        for (c, (v, dv)) in lam.values.iter_mut().zip(&d).enumerate() {
            *v += t * dv;
            if *v <= JOINING_TOLERANCE && !active.contains(&c) {
                *v = 0.0;
                active.push(c);
            }
        }
    }
}

/// `U_π f = f∘π` and its Markov adjoint for a factor map `π: X₁ → X₂`.
#[derive(Clone, Debug)]
pub struct FactorMarkov {
    /// `L²(p₂) → L²(p₁)`, an isometry.
    pub isometry: Operator,
    /// `L²(p₁) → L²(p₂)`, conditional expectation onto the fibers.
    pub adjoint: MarkovOperator,
}

pub fn markov_from_factor_map(
    pi: &[usize],
    sys1: &FiniteMps,
    sys2: &FiniteMps,
) -> Result<FactorMarkov> {
    if pi.len() != sys1.len() || pi.iter().any(|&y| y >= sys2.len()) {
        return Err(Error::System(format!(
            "{pi:?} is not a map into {} points",
            sys2.len()
        )));
    }
    if (0..sys1.len()).any(|x| pi[sys1.perm[x]] != sys2.perm[pi[x]]) {
        return Err(Error::System("factor map is not equivariant".into()));
    }
    let mut push = vec![0.0; sys2.len()];
    for (x, &y) in pi.iter().enumerate() {
        push[y] += sys1.p[x];
    }
    if push
        .iter()
        .zip(&sys2.p)
        .any(|(a, b)| (a - b).abs() > JOINING_TOLERANCE)
    {
        return Err(Error::System(
            "factor map does not preserve the measure".into(),
        ));
    }
    let isometry = Operator::from_fn(sys1.len(), sys2.len(), |x, y| {
        Complex64::new(if pi[x] == y { 1.0 } else { 0.0 }, 0.0)
    });
    let adjoint = Operator::from_fn(sys2.len(), sys1.len(), |y, x| {
        Complex64::new(
            if pi[x] == y {
                sys1.p[x] / sys2.p[y]
            } else {
                0.0
            },
            0.0,
        )
    });
    Ok(FactorMarkov {
        isometry,
        adjoint: MarkovOperator::new(adjoint, sys1.p.clone(), sys2.p.clone())?,
    })
}

/// `Ψ∘Φ` with the checks behind "a Markov operator with dense range composed
/// with a nontrivial one is nontrivial".
#[derive(Clone, Debug)]
pub struct Composition {
    pub operator: MarkovOperator,
    pub report: MarkovReport,
    pub phi_range_margin: f64,
    pub psi_distance: f64,
    pub distance: f64,
}

impl Composition {
    /// `Φ` has dense range and `Ψ` is not the projection onto constants.
    pub fn hypotheses_hold(&self) -> bool {
        self.phi_range_margin > NONTRIVIALITY_TOLERANCE
            && self.psi_distance > NONTRIVIALITY_TOLERANCE
    }

    pub fn nontrivial(&self) -> bool {
        self.distance > NONTRIVIALITY_TOLERANCE
    }

    pub fn passed(&self) -> bool {
        self.report.passed() && (!self.hypotheses_hold() || self.nontrivial())
    }
}

pub fn compose_markov(
    psi: &MarkovOperator,
    phi: &MarkovOperator,
    trials: usize,
    seed: u64,
) -> Result<Composition> {
    if psi.matrix.cols() != phi.matrix.rows() {
        return Err(Error::DimensionMismatch {
            expected: phi.matrix.rows(),
            found: psi.matrix.cols(),
        });
    }
    if psi
        .source
        .iter()
        .zip(&phi.target)
        .any(|(a, b)| (a - b).abs() > PROBABILITY_TOLERANCE)
    {
        return Err(Error::Precondition("the middle measures differ".into()));
    }
    for (name, op) in [("Ψ", psi), ("Φ", phi)] {
        let r = op.verify(trials, seed)?;
        if !r.passed() {
            return Err(Error::NotMarkov(format!("{name}: {r:?}")));
        }
    }
    let operator = MarkovOperator::new(
        psi.matrix.compose(&phi.matrix)?,
        phi.source.clone(),
        psi.target.clone(),
    )?;
    let report = operator.verify(trials, seed)?;
    let pi = projection_onto_constants(&operator.source, operator.matrix.rows());
    let distance = weighted_norm(
        &operator.matrix.sub(&pi)?,
        &operator.source,
        &operator.target,
    );
    Ok(Composition {
        report,
        phi_range_margin: phi.range_margin(),
        psi_distance: psi.distance_from_constants(),
        distance,
        operator,
    })
}
