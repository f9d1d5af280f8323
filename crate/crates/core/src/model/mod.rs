//! Two skew products over a cyclic base and the Markov operator joining them.
//!
//! The base is `X = ℤ_N` with `T x = x + 1` and `S x = x + s`. For a cocycle
//! `φ: ℤ_N → {0, 1}` the two automorphisms of `X × {0,1}^ℤ` are
//!
//! ```text
//! T₁(x, i) = (x + 1, (i_t + φ(x + ts))_t)
//! T₂(x, i) = (x + 1, (i_t + φ(x + t's))_t),   t' = t for t ≤ 0, t' = t + 1 for t ≥ 1
//! ```
//!
//! and `I_n(x, i) = (x + ns, ..., i_{n−1}, i_n, i_{n+2}, ...)` satisfies
//! `I_n ∘ T₁ = T₂ ∘ I_n`. Coordinates are truncated to the window
//! `W = [−M, M]` and functions are expanded in the orthonormal characters
//!
//! ```text
//! (j, A)(x, i) = e^{2πijx/N} (−1)^{Σ_{t∈A} i_t},    j ∈ ℤ_N,  A ⊆ W
//! ```
//!
//! where `A = ∅` is the base-only sector. Operators are evaluated lazily, one
//! column at a time; a column is `None` when its image leaves the window.

mod checks;
mod grid;

pub use checks::{
    geometric_counterexample, j_grid_realization, kernel_margin, verify_intertwining,
    verify_markov_j, xi_identity_check, zeta_identity_check, CounterexampleReport,
    IntertwiningReport, JGridRealization, KernelMargins, MarkovPair, Sector,
    COUNTEREXAMPLE_TOLERANCE,
};
pub use grid::{grid_oracle, oracle_deviation, GridVector};

use std::collections::BTreeMap;

use num::complex::Complex64;
use num::integer::gcd;
use num::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finsets::{FinSet, Window};
use crate::hilbert::turn;
use crate::weights::{WeightSequence, NORMALIZATION_TOLERANCE};

// widest window whose subsets still fit into a u64 mask
const MAX_WINDOW_BITS: usize = 62;

/// Parameters of the truncated model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Size of the base space `ℤ_N`.
    #[serde(rename = "N")]
    pub n: usize,
    /// Step of `S`.
    pub s: i64,
    /// The cocycle, `phi[x] ∈ {0, 1}`.
    pub phi: Vec<u8>,
    /// Window half-width.
    #[serde(rename = "M")]
    pub m: usize,
    /// Weight half-width.
    #[serde(rename = "K")]
    pub k: usize,
    pub safe_margin: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let mut phi = vec![0; 8];
        phi[0] = 1;
        Self {
            n: 8,
            s: 1,
            phi,
            m: 4,
            k: 2,
            safe_margin: 3,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("N must be positive".into()));
        }
        if gcd(self.s.rem_euclid(self.n as i64) as usize, self.n) != 1 {
            return Err(Error::Config(format!(
                "s = {} is not coprime to N = {}",
                self.s, self.n
            )));
        }
        if self.phi.len() != self.n {
            return Err(Error::Config(format!(
                "phi has length {}, expected N = {}",
                self.phi.len(),
                self.n
            )));
        }
        if self.phi.iter().any(|&v| v > 1) {
            return Err(Error::Config("phi must take values in {0, 1}".into()));
        }
        if 2 * self.m + 1 > MAX_WINDOW_BITS {
            return Err(Error::Config(format!("M = {} is too large", self.m)));
        }
        if self.safe_margin < self.k + 1 || self.safe_margin > self.m {
            return Err(Error::Config(format!(
                "safe_margin must lie in [K + 1, M] = [{}, {}], got {}",
                self.k + 1,
                self.m,
                self.safe_margin
            )));
        }
        Ok(())
    }

    /// `W = [−M, M]`.
    pub fn window(&self) -> Window {
        Window::symmetric(self.m as i64)
    }

    /// `[−M + margin, M − margin]`.
    pub fn safe_window(&self) -> Window {
        self.window().dilate(-(self.safe_margin as i64))
    }

    pub fn dimension(&self) -> usize {
        self.n << self.window().len()
    }
}

/// `(x, g) ↦ (x + 1, g + φ(x))` on `ℤ_N × ℤ₂` is a single orbit.
pub fn skew_ergodic(cfg: &ModelConfig) -> bool {
    let (mut x, mut g, mut len) = (0usize, 0u8, 0usize);
    loop {
        g ^= cfg.phi[x];
        x = (x + 1) % cfg.n;
        len += 1;
        if x == 0 && g == 0 {
            break;
        }
    }
    len == 2 * cfg.n
}

/// Basis label `(j, A)`; `set == None` is the ∅ sector.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CharacterIndex {
    pub j: usize,
    pub set: Option<FinSet>,
}

impl CharacterIndex {
    pub fn new(j: usize, set: Option<FinSet>) -> Self {
        Self { j, set }
    }

    pub fn base(j: usize) -> Self {
        Self { j, set: None }
    }

    pub fn within(&self, window: Window) -> bool {
        self.set.as_ref().is_none_or(|a| a.is_within(window))
    }
}

/// Finitely supported coefficient vector in the character basis.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelVector {
    coefficients: BTreeMap<CharacterIndex, Complex64>,
}

impl ModelVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn basis(index: CharacterIndex) -> Self {
        let mut v = Self::new();
        v.add_term(index, Complex64::new(1.0, 0.0));
        v
    }

    pub fn add_term(&mut self, index: CharacterIndex, value: Complex64) {
        *self
            .coefficients
            .entry(index)
            .or_insert_with(Complex64::zero) += value;
    }

    pub fn get(&self, index: &CharacterIndex) -> Complex64 {
        self.coefficients
            .get(index)
            .copied()
            .unwrap_or_else(Complex64::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CharacterIndex, &Complex64)> {
        self.coefficients.iter()
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.values().map(Complex64::norm_sqr).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, factor: Complex64) -> ModelVector {
        ModelVector {
            coefficients: self
                .coefficients
                .iter()
                .map(|(k, v)| (k.clone(), v * factor))
                .collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &ModelVector, factor: Complex64) {
        for (k, v) in &other.coefficients {
            self.add_term(k.clone(), v * factor);
        }
    }

    pub fn sub(&self, other: &ModelVector) -> ModelVector {
        let mut out = self.clone();
        out.add_scaled(other, Complex64::new(-1.0, 0.0));
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.coefficients
            .values()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// `x ↦ Σ_j c_{(j, set)} e^{2πijx/N}`, the coefficient function of one set.
    pub fn coefficient_function(&self, set: &Option<FinSet>, n: usize) -> Vec<Complex64> {
        let mut f = vec![Complex64::zero(); n];
        for j in 0..n {
            let c = self.get(&CharacterIndex::new(j, set.clone()));
            if c != Complex64::zero() {
                for (x, fx) in f.iter_mut().enumerate() {
                    *fx += c * root_of_unity((j * x) as i64, n);
                }
            }
        }
        f
    }

    /// Sets carrying at least one coefficient.
    pub fn sets(&self) -> Vec<Option<FinSet>> {
        let mut sets: Vec<Option<FinSet>> =
            self.coefficients.keys().map(|k| k.set.clone()).collect();
        sets.dedup();
        sets
    }
}

/// Which of the two skew products.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Extension {
    First,
    Second,
}

/// Lazily evaluated operator on the character model.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelOperator {
    /// `U_{T₁}` or `U_{T₂}`.
    Koopman(Extension),
    /// `U_{I_n}`.
    Isometry(i64),
    /// `U*_{I_n}`.
    IsometryAdjoint(i64),
    /// `U_{S̄^p}`.
    CoordinateShift(i64),
    /// `Σ c_k Op_k`.
    Combination(Vec<(f64, ModelOperator)>),
    /// `left ∘ right`.
    Compose(Box<ModelOperator>, Box<ModelOperator>),
}

pub fn koopman_t1() -> ModelOperator {
    ModelOperator::Koopman(Extension::First)
}

pub fn koopman_t2() -> ModelOperator {
    ModelOperator::Koopman(Extension::Second)
}

pub fn isometry_in(n: i64) -> ModelOperator {
    ModelOperator::Isometry(n)
}

pub fn adjoint_in(n: i64) -> ModelOperator {
    ModelOperator::IsometryAdjoint(n)
}

pub fn koopman_sbar(p: i64) -> ModelOperator {
    ModelOperator::CoordinateShift(p)
}

/// `J = Σ a_n U_{I_n}` for normalized weights supported in `[−K, K]`.
pub fn markov_j(a: &WeightSequence, cfg: &ModelConfig) -> Result<ModelOperator> {
    check_markov_weights(a, cfg)?;
    Ok(weighted_sum(a, ModelOperator::Isometry))
}

/// `J* = Σ a_n U*_{I_n}`.
pub fn markov_j_adjoint(a: &WeightSequence, cfg: &ModelConfig) -> Result<ModelOperator> {
    check_markov_weights(a, cfg)?;
    Ok(weighted_sum(a, ModelOperator::IsometryAdjoint))
}

pub(crate) fn weighted_sum(a: &WeightSequence, term: fn(i64) -> ModelOperator) -> ModelOperator {
    ModelOperator::Combination(a.support().map(|(n, w)| (w, term(n))).collect())
}

fn check_markov_weights(a: &WeightSequence, cfg: &ModelConfig) -> Result<()> {
    let sum = a.sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Unnormalized { sum });
    }
    if let Some((n, _)) = a.support().find(|(n, _)| n.unsigned_abs() as usize > cfg.k) {
        return Err(Error::Window(format!(
            "weight at n = {n} lies outside [−K, K] with K = {}",
            cfg.k
        )));
    }
    Ok(())
}

/// `e^{2πi·k/N}`.
pub(crate) fn root_of_unity(k: i64, n: usize) -> Complex64 {
    turn(k.rem_euclid(n as i64) as f64 / n as f64)
}

/// A validated configuration together with the tables the operators need.
#[derive(Clone, Debug)]
pub struct Model {
    cfg: ModelConfig,
    window: Window,
}

impl Model {
    pub fn new(cfg: ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let window = cfg.window();
        Ok(Self { cfg, window })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// Every basis index `(j, A)` with `A ⊆ w`, including the ∅ sector.
    pub fn basis_within(&self, w: Window) -> Vec<CharacterIndex> {
        let mut out = Vec::with_capacity(self.cfg.n << w.len());
        for set in w.subsets() {
            for j in 0..self.cfg.n {
                out.push(CharacterIndex::new(j, set.clone()));
            }
        }
        out
    }

    pub fn basis(&self) -> Vec<CharacterIndex> {
        self.basis_within(self.window)
    }

    fn phase(&self, j: usize, shift: i64) -> Complex64 {
        root_of_unity(j as i64 * shift * self.cfg.s, self.cfg.n)
    }

    fn phi_at(&self, x: i64) -> u8 {
        self.cfg.phi[x.rem_euclid(self.cfg.n as i64) as usize]
    }

    fn inside(&self, set: &FinSet) -> bool {
        set.is_within(self.window)
    }

    /// Image of one basis vector; `None` outside the operator's domain.
    pub fn column(&self, op: &ModelOperator, index: &CharacterIndex) -> Option<ModelVector> {
        let j = index.j;
        match op {
            ModelOperator::Koopman(ext) => {
                if !index.within(self.window) {
                    return None;
                }
                Some(self.koopman_column(*ext, index))
            }
            ModelOperator::Isometry(n) => match &index.set {
                None => Some(self.single(j, None, self.phase(j, *n))),
                Some(a) => {
                    let b = a.hat().shift(*n);
                    (index.within(self.window) && self.inside(&b))
                        .then(|| self.single(j, Some(b), self.phase(j, *n)))
                }
            },
            ModelOperator::IsometryAdjoint(n) => match &index.set {
                None => Some(self.single(j, None, self.phase(j, -*n))),
                Some(b) => {
                    if !index.within(self.window) {
                        None
                    } else if b.contains(n + 1) {
                        Some(ModelVector::new())
                    } else {
                        let c = b.shift(-*n).tilde().expect("1 is not in B − n");
                        self.inside(&c)
                            .then(|| self.single(j, Some(c), self.phase(j, -*n)))
                    }
                }
            },
            ModelOperator::CoordinateShift(p) => match &index.set {
                None => Some(self.single(j, None, self.phase(j, *p))),
                Some(a) => {
                    let b = a.shift(*p);
                    (index.within(self.window) && self.inside(&b))
                        .then(|| self.single(j, Some(b), self.phase(j, *p)))
                }
            },
            ModelOperator::Combination(terms) => {
                let mut out = ModelVector::new();
                for (w, term) in terms {
                    out.add_scaled(&self.column(term, index)?, Complex64::new(*w, 0.0));
                }
                Some(out)
            }
            ModelOperator::Compose(left, right) => self.apply(left, &self.column(right, index)?),
        }
    }

    /// `op(v)`, or `None` if some support index lies outside the domain.
    pub fn apply(&self, op: &ModelOperator, v: &ModelVector) -> Option<ModelVector> {
        let mut out = ModelVector::new();
        for (index, c) in v.iter() {
            out.add_scaled(&self.column(op, index)?, *c);
        }
        Some(out)
    }

    /// [`apply`](Self::apply) with an error outside the domain.
    pub fn try_apply(&self, op: &ModelOperator, v: &ModelVector) -> Result<ModelVector> {
        self.apply(op, v)
            .ok_or_else(|| Error::Domain("vector leaves the truncation window".into()))
    }

    fn single(&self, j: usize, set: Option<FinSet>, value: Complex64) -> ModelVector {
        let mut v = ModelVector::new();
        v.add_term(CharacterIndex::new(j, set), value);
        v
    }

    /// Parity `Σ_{t∈A} φ(x + t's)` for every `x`.
    pub(crate) fn cocycle_parity(&self, ext: Extension, set: &FinSet) -> Vec<u8> {
        (0..self.cfg.n as i64)
            .map(|x| {
                set.iter()
                    .map(|t| self.phi_at(x + reindex(ext, t) * self.cfg.s))
                    .fold(0, |acc, v| acc ^ v)
            })
            .collect()
    }

    fn koopman_column(&self, ext: Extension, index: &CharacterIndex) -> ModelVector {
        let n = self.cfg.n;
        let j = index.j;
        let Some(set) = &index.set else {
            return self.single(j, None, root_of_unity(j as i64, n));
        };
        // g(x) = e^{2πij(x+1)/N} (−1)^{φ_A(x)}, expanded over base characters
        let parity = self.cocycle_parity(ext, set);
        let g: Vec<Complex64> = (0..n)
            .map(|x| {
                let sign = if parity[x] == 1 { -1.0 } else { 1.0 };
                root_of_unity((j * (x + 1)) as i64, n) * sign
            })
            .collect();
        let mut out = ModelVector::new();
        for jp in 0..n {
            let c: Complex64 = g
                .iter()
                .enumerate()
                .map(|(x, gx)| gx * root_of_unity(-((jp * x) as i64), n))
                .sum::<Complex64>()
                / n as f64;
            if c.norm() > 1e-15 {
                out.add_term(CharacterIndex::new(jp, Some(set.clone())), c);
            }
        }
        out
    }
}

/// Coordinate of `φ` read by position `t` under the given extension.
pub(crate) fn reindex(ext: Extension, t: i64) -> i64 {
    match ext {
        Extension::First => t,
        Extension::Second if t >= 1 => t + 1,
        Extension::Second => t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[i64]) -> FinSet {
        FinSet::new(v.iter().copied()).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::default().validate().is_ok());
        let mut c = ModelConfig::default();
        c.s = 2;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::default();
        c.safe_margin = 2;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::default();
        c.phi[3] = 2;
        assert!(c.validate().is_err());
        let json = serde_json::to_string(&ModelConfig::default()).unwrap();
        assert!(json.contains("\"N\":8") && json.contains("\"M\":4"));
    }

    #[test]
    fn skew_ergodicity_matches_parity() {
        let mut c = ModelConfig::default();
        assert!(skew_ergodic(&c));
        c.phi = vec![1, 1, 0, 0, 0, 0, 0, 0];
        assert!(!skew_ergodic(&c));
        c.phi = vec![1, 1, 1, 0, 0, 0, 0, 0];
        assert!(skew_ergodic(&c));
    }

    #[test]
    fn isometry_examples() {
        let model = Model::new(ModelConfig::default()).unwrap();
        let col = model
            .column(&isometry_in(0), &CharacterIndex::new(3, Some(set(&[1]))))
            .unwrap();
        assert_eq!(col.len(), 1);
        assert!((col.get(&CharacterIndex::new(3, Some(set(&[2])))) - 1.0).norm() < 1e-15);
        let back = model
            .column(&adjoint_in(0), &CharacterIndex::new(3, Some(set(&[1]))))
            .unwrap();
        assert!(back.is_empty());
        let back = model
            .column(&adjoint_in(0), &CharacterIndex::new(3, Some(set(&[2]))))
            .unwrap();
        assert!((back.get(&CharacterIndex::new(3, Some(set(&[1])))) - 1.0).norm() < 1e-15);
        // {4} leaves the window under hat
        assert!(model
            .column(&isometry_in(0), &CharacterIndex::new(0, Some(set(&[4]))))
            .is_none());
        let sbar = model
            .column(&koopman_sbar(1), &CharacterIndex::new(0, Some(set(&[0]))))
            .unwrap();
        assert!((sbar.get(&CharacterIndex::new(0, Some(set(&[1])))) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn isometry_law_and_factorization() {
        let model = Model::new(ModelConfig::default()).unwrap();
        let safe = model.config().safe_window();
        for n in -2..=2i64 {
            let compose = ModelOperator::Compose(Box::new(adjoint_in(n)), Box::new(isometry_in(n)));
            let factored =
                ModelOperator::Compose(Box::new(koopman_sbar(n)), Box::new(isometry_in(0)));
            for idx in model.basis_within(safe) {
                let back = model.column(&compose, &idx).unwrap();
                assert!(back.sub(&ModelVector::basis(idx.clone())).max_abs() <= 1e-12);
                let direct = model.column(&isometry_in(n), &idx).unwrap();
                assert!(
                    direct
                        .sub(&model.column(&factored, &idx).unwrap())
                        .max_abs()
                        <= 1e-12
                );
            }
        }
    }

    #[test]
    fn trivial_cocycle_only_rotates() {
        let mut cfg = ModelConfig::default();
        cfg.phi = vec![0; 8];
        let model = Model::new(cfg).unwrap();
        let idx = CharacterIndex::new(5, Some(set(&[-1, 2])));
        for op in [koopman_t1(), koopman_t2()] {
            let col = model.column(&op, &idx).unwrap();
            assert_eq!(col.len(), 1);
            assert!((col.get(&idx) - root_of_unity(5, 8)).norm() < 1e-14);
        }
    }

    #[test]
    fn markov_weights_are_checked() {
        let cfg = ModelConfig::default();
        let unnormalized = WeightSequence::new(vec![0.5, 0.0, 0.0]).unwrap();
        assert!(matches!(
            markov_j(&unnormalized, &cfg),
            Err(Error::Unnormalized { .. })
        ));
        let wide = WeightSequence::delta(3, 3).unwrap();
        assert!(matches!(markov_j(&wide, &cfg), Err(Error::Window(_))));
        let delta = WeightSequence::delta(0, 2).unwrap();
        assert_eq!(
            markov_j(&delta, &cfg).unwrap(),
            ModelOperator::Combination(vec![(1.0, isometry_in(0))])
        );
    }
}
