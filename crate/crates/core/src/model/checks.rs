use std::collections::HashMap;

use num::complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    koopman_sbar, koopman_t1, koopman_t2, weighted_sum, CharacterIndex, Model, ModelOperator,
    ModelVector,
};
use crate::error::{Error, Result};
use crate::finsets::{FinSet, Window};
use crate::hilbert::{LinearMap, Operator, SparseOperator};
use crate::markov::{verify_markov, MarkovReport};
use crate::weights::{geometric_weights, WeightSequence};

/// Residual of `U_{T₁}·J − J·U_{T₂}` on the safe subspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntertwiningReport {
    /// Frobenius norm over the safe columns; bounds the restricted operator norm.
    pub residual: f64,
    pub max_column_residual: f64,
    pub safe_dimension: usize,
}

pub fn verify_intertwining(model: &Model, j: &ModelOperator) -> Result<IntertwiningReport> {
    let columns = model.basis_within(model.config().safe_window());
    let (t1, t2) = (koopman_t1(), koopman_t2());
    let residuals: Vec<f64> = columns
        .par_iter()
        .map(|idx| {
            let e = ModelVector::basis(idx.clone());
            let lhs = model.try_apply(&t1, &model.try_apply(j, &e)?)?;
            let rhs = model.try_apply(j, &model.try_apply(&t2, &e)?)?;
            Ok(lhs.sub(&rhs).norm())
        })
        .collect::<Result<_>>()?;
    Ok(IntertwiningReport {
        residual: residuals.iter().map(|r| r * r).sum::<f64>().sqrt(),
        max_column_residual: residuals.iter().copied().fold(0.0, f64::max),
        safe_dimension: columns.len(),
    })
}

/// Column filter for [`kernel_margin`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sector {
    /// `(j, A)` with `∅ ≠ A ⊆` safe window.
    SafeNonempty,
    /// `(j, ∅)`.
    EmptySet,
    /// Both of the above.
    Safe,
    /// Every column in the operator's domain.
    Domain,
}

/// Smallest singular value of `op` restricted to the sector's columns.
///
/// Columns are grouped into blocks that share no output index and each block
/// is decomposed separately.
pub fn kernel_margin(model: &Model, op: &ModelOperator, sector: Sector) -> Result<f64> {
    let safe = model.config().safe_window();
    let indices: Vec<CharacterIndex> = match sector {
        Sector::SafeNonempty => model
            .basis_within(safe)
            .into_iter()
            .filter(|i| i.set.is_some())
            .collect(),
        Sector::EmptySet => (0..model.config().n).map(CharacterIndex::base).collect(),
        Sector::Safe => model.basis_within(safe),
        Sector::Domain => model.basis(),
    };
    let columns: Vec<ModelVector> = match sector {
        Sector::Domain => indices
            .par_iter()
            .filter_map(|i| model.column(op, i))
            .collect(),
        _ => indices
            .par_iter()
            .map(|i| {
                model.column(op, i).ok_or_else(|| {
                    Error::Domain(format!("column {i:?} outside the operator's domain"))
                })
            })
            .collect::<Result<_>>()?,
    };
    if columns.is_empty() {
        return Err(Error::EmptyRestriction);
    }
    Ok(block_min_singular_value(&columns))
}

fn block_min_singular_value(columns: &[ModelVector]) -> f64 {
    let mut row_ids: HashMap<&CharacterIndex, usize> = HashMap::new();
    let mut parent: Vec<usize> = (0..columns.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut first_column_of_row: Vec<usize> = Vec::new();
    for (c, col) in columns.iter().enumerate() {
        for (key, _) in col.iter() {
            let next = row_ids.len();
            let id = *row_ids.entry(key).or_insert(next);
            if id == first_column_of_row.len() {
                first_column_of_row.push(c);
            } else {
                let (a, b) = (
                    find(&mut parent, c),
                    find(&mut parent, first_column_of_row[id]),
                );
                parent[a] = b;
            }
        }
    }
    let mut blocks: HashMap<usize, Vec<usize>> = HashMap::new();
    for c in 0..columns.len() {
        blocks.entry(find(&mut parent, c)).or_default().push(c);
    }
    let blocks: Vec<Vec<usize>> = blocks.into_values().collect();
    blocks
        .par_iter()
        .map(|cols| {
            let mut local: HashMap<&CharacterIndex, usize> = HashMap::new();
            for &c in cols {
                for (key, _) in columns[c].iter() {
                    let next = local.len();
                    local.entry(key).or_insert(next);
                }
            }
            if local.len() < cols.len() {
                return 0.0;
            }
            let mut m = Operator::zeros(local.len(), cols.len());
            for (k, &c) in cols.iter().enumerate() {
                for (key, v) in columns[c].iter() {
                    m.set(local[key], k, *v);
                }
            }
            m.injectivity_margin()
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Kernel margins of `J` and `J*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelMargins {
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "J_adjoint")]
    pub j_adjoint: f64,
    /// Margin on the ∅ sector, the smaller of the two operators.
    pub empty_sector: f64,
}

impl KernelMargins {
    pub fn compute(model: &Model, a: &WeightSequence) -> Result<Self> {
        let j = weighted_sum(a, ModelOperator::Isometry);
        let js = weighted_sum(a, ModelOperator::IsometryAdjoint);
        Ok(Self {
            j: kernel_margin(model, &j, Sector::SafeNonempty)?,
            j_adjoint: kernel_margin(model, &js, Sector::SafeNonempty)?,
            empty_sector: kernel_margin(model, &j, Sector::EmptySet)?.min(kernel_margin(
                model,
                &js,
                Sector::EmptySet,
            )?),
        })
    }
}

/// `J` as a map `L²(ℤ_N × {0,1}^D) → L²(ℤ_N × {0,1}^W)` with
/// `D = [−M + K, M − K − 1]`, the largest window every `I_n`, `|n| ≤ K`,
/// reads from inside `W`.
#[derive(Clone, Debug)]
pub struct JGridRealization {
    pub operator: SparseOperator,
    pub source_window: Window,
    pub source: Vec<f64>,
    pub target: Vec<f64>,
}

pub fn j_grid_realization(model: &Model, a: &WeightSequence) -> Result<JGridRealization> {
    let cfg = model.config();
    let (m, k) = (cfg.m as i64, a.half_width().max(cfg.k) as i64);
    let d = Window::new(-m + k, m - k - 1);
    if d.is_empty() {
        return Err(Error::Window(format!(
            "no coordinates left for K = {k} inside M = {m}"
        )));
    }
    let w = model.window();
    let rows = model.grid_dimension()?;
    let cols = cfg.n << d.len();
    let n_base = cfg.n as i64;
    let mut op = SparseOperator::new(rows, cols);
    for x in 0..n_base {
        for mask in 0..(1u64 << w.len()) {
            let r = ((x as usize) << w.len()) | mask as usize;
            for (n, weight) in a.support() {
                let src = d.iter().enumerate().fold(0u64, |acc, (b, t)| {
                    let from = if t <= 0 { t + n } else { t + n + 1 };
                    acc | (((mask >> (from - w.lo)) & 1) << b)
                });
                let base = (x + n * cfg.s).rem_euclid(n_base) as usize;
                op.push(
                    r,
                    (base << d.len()) | src as usize,
                    Complex64::new(weight, 0.0),
                );
            }
        }
    }
    Ok(JGridRealization {
        operator: op,
        source_window: d,
        source: vec![1.0 / cols as f64; cols],
        target: vec![1.0 / rows as f64; rows],
    })
}

/// Markov checks for `J` and its weighted adjoint on the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovPair {
    #[serde(rename = "J")]
    pub j: MarkovReport,
    #[serde(rename = "J_adjoint")]
    pub j_adjoint: MarkovReport,
}

impl MarkovPair {
    pub fn passed(&self) -> bool {
        self.j.passed() && self.j_adjoint.passed()
    }
}

pub fn verify_markov_j(
    model: &Model,
    a: &WeightSequence,
    trials: usize,
    seed: u64,
) -> Result<MarkovPair> {
    let real = j_grid_realization(model, a)?;
    let mut adjoint = SparseOperator::new(real.operator.cols(), real.operator.rows());
    real.operator.for_each_entry(&mut |r, c, v| {
        adjoint.push(c, r, v.conj() * real.target[r] / real.source[c]);
    });
    Ok(MarkovPair {
        j: verify_markov(&real.operator, &real.source, &real.target, trials, seed)?,
        j_adjoint: verify_markov(&adjoint, &real.target, &real.source, trials, seed)?,
    })
}

fn coefficient_functions(
    model: &Model,
    f: &ModelVector,
) -> HashMap<Option<FinSet>, Vec<Complex64>> {
    f.sets()
        .into_iter()
        .map(|s| {
            let values = f.coefficient_function(&s, model.config().n);
            (s, values)
        })
        .collect()
}

fn lookup(
    table: &HashMap<Option<FinSet>, Vec<Complex64>>,
    set: FinSet,
    x: i64,
    n: usize,
) -> Complex64 {
    table.get(&Some(set)).map_or(Complex64::new(0.0, 0.0), |f| {
        f[x.rem_euclid(n as i64) as usize]
    })
}

fn max_gap(lhs: &[Complex64], rhs: &[Complex64]) -> f64 {
    lhs.iter()
        .zip(rhs)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

fn require_canonical(b: &FinSet) -> Result<()> {
    if !b.is_canonical() {
        return Err(Error::Precondition(format!(
            "{b} is not in the fundamental domain (min 0)"
        )));
    }
    Ok(())
}

/// Compares the coefficient function of `JF` at `B + k` with
/// `[ā ∗ ξ^B(S^k x)]_k`, where `ξ^B_{−n}(x) = f_{(B−n)~}(Sⁿx)` for `n + 1 ∉ B`
/// and 0 otherwise, for every `k` with `B + k ⊆ W`.
pub fn xi_identity_check(
    model: &Model,
    a: &WeightSequence,
    f: &ModelVector,
    b: &FinSet,
) -> Result<f64> {
    require_canonical(b)?;
    let (n_base, s) = (model.config().n, model.config().s);
    let jf = model.try_apply(&weighted_sum(a, ModelOperator::Isometry), f)?;
    let table = coefficient_functions(model, f);
    let xi = |m: i64, y: i64| -> Complex64 {
        let n = -m;
        if b.contains(n + 1) {
            Complex64::new(0.0, 0.0)
        } else {
            lookup(
                &table,
                b.shift(-n).tilde().expect("n + 1 ∉ B"),
                y + n * s,
                n_base,
            )
        }
    };
    let w = model.window();
    let mut worst: f64 = 0.0;
    for k in (w.lo - b.min())..=(w.hi - b.max()) {
        let lhs = jf.coefficient_function(&Some(b.shift(k)), n_base);
        let rhs: Vec<Complex64> = (0..n_base as i64)
            .map(|x| a.support().map(|(n, an)| xi(k - n, x + k * s) * an).sum())
            .collect();
        worst = worst.max(max_gap(&lhs, &rhs));
    }
    Ok(worst)
}

/// Compares the coefficient function of `J*F` at `(A−k)~` with
/// `[ā ∗ ζ^A(S^{−k} x)]_k`, where `ζ^A(x)_l = f_{A−l}(S^l x)`, for every `k`
/// with `k + 1 ∉ A` and `(A−k)~ ⊆ W`.
pub fn zeta_identity_check(
    model: &Model,
    a: &WeightSequence,
    f: &ModelVector,
    set: &FinSet,
) -> Result<f64> {
    require_canonical(set)?;
    let (n_base, s) = (model.config().n, model.config().s);
    let jsf = model.try_apply(&weighted_sum(a, ModelOperator::IsometryAdjoint), f)?;
    let table = coefficient_functions(model, f);
    let zeta = |l: i64, y: i64| lookup(&table, set.shift(-l), y + l * s, n_base);
    let w = model.window();
    let mut worst: f64 = 0.0;
    for k in (set.min() - w.hi - 1)..=(set.max() - w.lo + 1) {
        if set.contains(k + 1) {
            continue;
        }
        let target = set.shift(-k).tilde().expect("k + 1 ∉ A");
        if !target.is_within(w) {
            continue;
        }
        let lhs = jsf.coefficient_function(&Some(target), n_base);
        let rhs: Vec<Complex64> = (0..n_base as i64)
            .map(|x| a.support().map(|(n, an)| zeta(k - n, x - k * s) * an).sum())
            .collect();
        worst = worst.max(max_gap(&lhs, &rhs));
    }
    Ok(worst)
}

/// The geometric-weights example: `F = G − ½ U_{S̄^{−1}} G` with `G ∈ ker U*_{I_0}`
/// is almost annihilated by `J* = Σ_{n=0}^{K} 2^{−(n+1)} U*_{I_n}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    #[serde(rename = "K")]
    pub k: usize,
    pub g_norm: f64,
    /// `‖U*_{I_0} G‖`, zero by the choice of `G`.
    pub g_kernel_residual: f64,
    pub f_norm: f64,
    /// `‖J*F‖`.
    pub measured: f64,
    /// `2^{−(K+2)} ‖G‖`.
    pub bound: f64,
    pub weight_sum: f64,
    /// `1 − Σ a_n = 2^{−(K+1)}`; the weights are deliberately left unnormalized.
    pub weight_deficit: f64,
    pub bound_met: bool,
    pub norm_bound_met: bool,
    pub passed: bool,
}

pub const COUNTEREXAMPLE_TOLERANCE: f64 = 1e-12;

pub fn geometric_counterexample(model: &Model, k: usize) -> Result<CounterexampleReport> {
    if model.config().m < k + 1 {
        return Err(Error::Window(format!(
            "the example needs M ≥ K + 1 = {}, got M = {}",
            k + 1,
            model.config().m
        )));
    }
    let a = geometric_weights(k)?;
    let j = 1 % model.config().n;
    let g = ModelVector::basis(CharacterIndex::new(j, Some(FinSet::singleton(1))));
    let g_kernel_residual = model
        .try_apply(&ModelOperator::IsometryAdjoint(0), &g)?
        .norm();
    let mut f = g.clone();
    f.add_scaled(
        &model.try_apply(&koopman_sbar(-1), &g)?,
        Complex64::new(-0.5, 0.0),
    );
    let js = weighted_sum(&a, ModelOperator::IsometryAdjoint);
    let measured = model.try_apply(&js, &f)?.norm();
    let g_norm = g.norm();
    let bound = 0.5f64.powi(k as i32 + 2) * g_norm;
    let f_norm = f.norm();
    let bound_met = measured <= bound + COUNTEREXAMPLE_TOLERANCE;
    let norm_bound_met = f_norm >= 0.5 * g_norm;
    let weight_sum = a.sum();
    Ok(CounterexampleReport {
        k,
        g_norm,
        g_kernel_residual,
        f_norm,
        measured,
        bound,
        weight_sum,
        weight_deficit: 1.0 - weight_sum,
        bound_met,
        norm_bound_met,
        passed: bound_met && norm_bound_met && g_kernel_residual <= COUNTEREXAMPLE_TOLERANCE,
    })
}
