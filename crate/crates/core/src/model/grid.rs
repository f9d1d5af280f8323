//! Pointwise realization on `ℤ_N × {0,1}^W`.
//!
//! Grid index `x · 2^{|W|} + mask`, where bit `b` of `mask` is the coordinate
//! `i_{W.lo + b}`. Functions carry the uniform probability inner product, so
//! every character has norm one.

use num::complex::Complex64;
use num::Zero;
use rayon::prelude::*;

use super::{reindex, root_of_unity, CharacterIndex, Extension, Model, ModelOperator, ModelVector};
use crate::error::{Error, Result};
use crate::finsets::{FinSet, Window};
use crate::hilbert::{LinearMap, SparseOperator};

// 2^22 grid points (×16 bytes) is as far as the dense grid is allowed to go
const MAX_GRID_BITS: usize = 22;

/// Function on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridVector(pub Vec<Complex64>);

impl GridVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Probability-weighted `L²` norm.
    pub fn norm(&self) -> f64 {
        (self.0.iter().map(Complex64::norm_sqr).sum::<f64>() / self.0.len() as f64).sqrt()
    }

    pub fn max_abs_diff(&self, other: &GridVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Model {
    fn grid_bits(&self) -> Result<usize> {
        let bits = self.window().len();
        let total = bits + (usize::BITS - self.config().n.leading_zeros()) as usize;
        if total > MAX_GRID_BITS {
            return Err(Error::Precondition(format!(
                "grid of size {} × 2^{bits} is too large to realize pointwise",
                self.config().n
            )));
        }
        Ok(bits)
    }

    pub fn grid_dimension(&self) -> Result<usize> {
        Ok(self.config().n << self.grid_bits()?)
    }

    fn mask_of(&self, set: &Option<FinSet>) -> u64 {
        set.as_ref().map_or(0, |a| {
            a.to_mask(self.window()).expect("set inside the window")
        })
    }

    /// Pointwise values `Σ c_{(j,A)} e^{2πijx/N} (−1)^{A(i)}`.
    pub fn to_grid(&self, v: &ModelVector) -> Result<GridVector> {
        let bits = self.grid_bits()?;
        let n = self.config().n;
        let size = 1usize << bits;
        if let Some((bad, _)) = v.iter().find(|(k, _)| !k.within(self.window()) || k.j >= n) {
            return Err(Error::Domain(format!("index {bad:?} outside the model")));
        }
        // coefficient functions f_A(x), then a Walsh transform over the masks at each x
        let mut values = vec![Complex64::zero(); n * size];
        for (idx, c) in v.iter() {
            let mask = self.mask_of(&idx.set) as usize;
            for x in 0..n {
                values[x * size + mask] += c * root_of_unity((idx.j * x) as i64, n);
            }
        }
        values.par_chunks_mut(size).for_each(walsh);
        Ok(GridVector(values))
    }

    /// Character coefficients of a grid function.
    pub fn from_grid(&self, g: &GridVector) -> Result<ModelVector> {
        let bits = self.grid_bits()?;
        let n = self.config().n;
        let size = 1usize << bits;
        if g.dim() != n * size {
            return Err(Error::DimensionMismatch {
                expected: n * size,
                found: g.dim(),
            });
        }
        let mut values = g.0.clone();
        values.par_chunks_mut(size).for_each(walsh);
        let mut out = ModelVector::new();
        for mask in 0..size {
            let set = FinSet::from_mask(mask as u64, self.window());
            for j in 0..n {
                let c: Complex64 = (0..n)
                    .map(|x| values[x * size + mask] * root_of_unity(-((j * x) as i64), n))
                    .sum::<Complex64>()
                    / (n * size) as f64;
                if c.norm() > 1e-15 {
                    out.add_term(CharacterIndex::new(j, set.clone()), c);
                }
            }
        }
        Ok(out)
    }

    fn grid_index(&self, x: i64, mask: u64, bits: usize) -> usize {
        ((x.rem_euclid(self.config().n as i64) as usize) << bits) | mask as usize
    }

    /// Bits of the flip `(φ(x + t's))_{t∈W}` applied by `T₁` or `T₂` at `x`.
    fn flip_mask(&self, ext: Extension, x: i64) -> u64 {
        let w = self.window();
        let cfg = self.config();
        w.iter()
            .enumerate()
            .filter(|&(_, t)| {
                cfg.phi[(x + reindex(ext, t) * cfg.s).rem_euclid(cfg.n as i64) as usize] == 1
            })
            .fold(0, |m, (b, _)| m | (1 << b))
    }

    /// Reads the source mask whose bit for position `t` is `i_{source(t)}`,
    /// with positions whose source lies outside the window set to 0.
    fn pull_mask(&self, mask: u64, source: impl Fn(i64) -> Option<i64>) -> u64 {
        let w = self.window();
        w.iter().enumerate().fold(0, |m, (b, t)| match source(t) {
            Some(src) if w.contains(src) && (mask >> (src - w.lo)) & 1 == 1 => m | (1 << b),
            _ => m,
        })
    }

    /// Koopman operator `F ↦ F ∘ T_k` of the grid permutation.
    pub fn grid_koopman(&self, ext: Extension) -> Result<SparseOperator> {
        let bits = self.grid_bits()?;
        let dim = self.config().n << bits;
        let mut op = SparseOperator::new(dim, dim);
        for x in 0..self.config().n as i64 {
            let flip = self.flip_mask(ext, x);
            for mask in 0..(1u64 << bits) {
                op.push(
                    self.grid_index(x, mask, bits),
                    self.grid_index(x + 1, mask ^ flip, bits),
                    one(),
                );
            }
        }
        Ok(op)
    }

    /// `F ↦ F ∘ I_n`; coordinates fed from outside the window read 0.
    pub fn grid_isometry(&self, n: i64) -> Result<SparseOperator> {
        let bits = self.grid_bits()?;
        let dim = self.config().n << bits;
        let shift = n * self.config().s;
        let mut op = SparseOperator::new(dim, dim);
        for x in 0..self.config().n as i64 {
            for mask in 0..(1u64 << bits) {
                let src = self.pull_mask(mask, |t| Some(if t <= 0 { t + n } else { t + n + 1 }));
                op.push(
                    self.grid_index(x, mask, bits),
                    self.grid_index(x + shift, src, bits),
                    one(),
                );
            }
        }
        Ok(op)
    }

    /// `U*_{I_n}`: averages over the coordinate at position `n + 1`.
    pub fn grid_isometry_adjoint(&self, n: i64) -> Result<SparseOperator> {
        let bits = self.grid_bits()?;
        let dim = self.config().n << bits;
        let shift = -n * self.config().s;
        let w = self.window();
        let mut op = SparseOperator::new(dim, dim);
        for x in 0..self.config().n as i64 {
            for mask in 0..(1u64 << bits) {
                let base = self.pull_mask(mask, |m| match m.cmp(&(n + 1)) {
                    std::cmp::Ordering::Less => Some(m - n),
                    std::cmp::Ordering::Equal => None,
                    std::cmp::Ordering::Greater => Some(m - n - 1),
                });
                for b in 0..2u64 {
                    let src = if b == 1 && w.contains(n + 1) {
                        base | 1 << (n + 1 - w.lo)
                    } else {
                        base
                    };
                    op.push(
                        self.grid_index(x, mask, bits),
                        self.grid_index(x + shift, src, bits),
                        half(),
                    );
                }
            }
        }
        Ok(op)
    }

    /// `F ↦ F ∘ S̄^p` with `S̄^p(x, i) = (x + ps, (i_{t+p})_t)`.
    pub fn grid_coordinate_shift(&self, p: i64) -> Result<SparseOperator> {
        let bits = self.grid_bits()?;
        let dim = self.config().n << bits;
        let shift = p * self.config().s;
        let mut op = SparseOperator::new(dim, dim);
        for x in 0..self.config().n as i64 {
            for mask in 0..(1u64 << bits) {
                let src = self.pull_mask(mask, |t| Some(t + p));
                op.push(
                    self.grid_index(x, mask, bits),
                    self.grid_index(x + shift, src, bits),
                    one(),
                );
            }
        }
        Ok(op)
    }
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn half() -> Complex64 {
    Complex64::new(0.5, 0.0)
}

/// In-place unnormalized Walsh-Hadamard transform.
fn walsh(values: &mut [Complex64]) {
    let mut h = 1;
    while h < values.len() {
        for block in values.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
}

/// Pointwise oracle for an operator built from Koopman, isometry, adjoint and
/// shift terms; `None` for compositions.
pub fn grid_oracle(model: &Model, op: &ModelOperator) -> Result<Option<SparseOperator>> {
    Ok(Some(match op {
        ModelOperator::Koopman(ext) => model.grid_koopman(*ext)?,
        ModelOperator::Isometry(n) => model.grid_isometry(*n)?,
        ModelOperator::IsometryAdjoint(n) => model.grid_isometry_adjoint(*n)?,
        ModelOperator::CoordinateShift(p) => model.grid_coordinate_shift(*p)?,
        ModelOperator::Combination(terms) => {
            let dim = model.grid_dimension()?;
            let mut sum = SparseOperator::new(dim, dim);
            for (w, term) in terms {
                let Some(part) = grid_oracle(model, term)? else {
                    return Ok(None);
                };
                part.for_each_entry(&mut |r, c, v| sum.push(r, c, v * *w));
            }
            sum
        }
        ModelOperator::Compose(..) => return Ok(None),
    }))
}

/// Largest pointwise gap between `to_grid(op e_c)` and `oracle(to_grid(e_c))`
/// over all domain columns `e_c` with set inside `within`, and the number of
/// columns compared.
pub fn oracle_deviation(model: &Model, op: &ModelOperator, within: Window) -> Result<(f64, usize)> {
    let oracle = grid_oracle(model, op)?
        .ok_or_else(|| Error::Precondition("no pointwise oracle for compositions".into()))?;
    let columns = model.basis_within(within);
    let results: Vec<Option<f64>> = columns
        .par_iter()
        .map(|idx| -> Result<Option<f64>> {
            let Some(image) = model.column(op, idx) else {
                return Ok(None);
            };
            let lhs = model.to_grid(&image)?;
            let rhs = GridVector(oracle.apply(&model.to_grid(&ModelVector::basis(idx.clone()))?.0));
            Ok(Some(lhs.max_abs_diff(&rhs)))
        })
        .collect::<Result<_>>()?;
    let compared = results.iter().flatten().count();
    Ok((results.into_iter().flatten().fold(0.0, f64::max), compared))
}
