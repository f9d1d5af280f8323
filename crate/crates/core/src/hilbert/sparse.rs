use num::complex::Complex64;
use num::Zero;

use super::Operator;

/// Read access shared by dense and sparse operators.
pub trait LinearMap: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64>;
    /// Plain conjugate-transpose action (unweighted).
    fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64>;
    /// Visits every stored entry `(row, col, value)`.
    fn for_each_entry(&self, f: &mut dyn FnMut(usize, usize, Complex64));
    fn to_dense(&self) -> Operator;
}

impl LinearMap for Operator {
    fn rows(&self) -> usize {
        Operator::rows(self)
    }

    fn cols(&self) -> usize {
        Operator::cols(self)
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let m = self.as_matrix();
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
            .collect()
    }

    fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let m = self.as_matrix();
        (0..m.ncols())
            .map(|j| (0..m.nrows()).map(|i| m[(i, j)].conj() * y[i]).sum())
            .collect()
    }

    fn for_each_entry(&self, f: &mut dyn FnMut(usize, usize, Complex64)) {
        let m = self.as_matrix();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                f(i, j, m[(i, j)]);
            }
        }
    }

    fn to_dense(&self) -> Operator {
        self.clone()
    }
}

/// Row-compressed sparse complex matrix.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    rows: usize,
    cols: usize,
    row_entries: Vec<Vec<(usize, Complex64)>>,
}

impl SparseOperator {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_entries: vec![Vec::new(); rows],
        }
    }

    /// Adds `value` to entry `(row, col)`.
    pub fn push(&mut self, row: usize, col: usize, value: Complex64) {
        debug_assert!(row < self.rows && col < self.cols);
        let entries = &mut self.row_entries[row];
        match entries.iter_mut().find(|(c, _)| *c == col) {
            Some((_, v)) => *v += value,
            None => entries.push((col, value)),
        }
    }

    pub fn nnz(&self) -> usize {
        self.row_entries.iter().map(Vec::len).sum()
    }

    pub fn row(&self, row: usize) -> &[(usize, Complex64)] {
        &self.row_entries[row]
    }
}

impl LinearMap for SparseOperator {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.row_entries
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::zero(); self.cols];
        for (r, row) in self.row_entries.iter().enumerate() {
            for &(c, v) in row {
                out[c] += v.conj() * y[r];
            }
        }
        out
    }

    fn for_each_entry(&self, f: &mut dyn FnMut(usize, usize, Complex64)) {
        for (r, row) in self.row_entries.iter().enumerate() {
            for &(c, v) in row {
                f(r, c, v);
            }
        }
    }

    fn to_dense(&self) -> Operator {
        let mut op = Operator::zeros(self.rows, self.cols);
        self.for_each_entry(&mut |r, c, v| op.set(r, c, op.get(r, c) + v));
        op
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_matches_dense() {
        let mut s = SparseOperator::new(3, 2);
        s.push(0, 1, Complex64::new(2.0, 0.0));
        s.push(2, 0, Complex64::new(0.0, 1.0));
        s.push(2, 0, Complex64::new(1.0, 0.0));
        assert_eq!(s.nnz(), 2);
        let d = s.to_dense();
        let x = [Complex64::new(1.0, 0.0), Complex64::new(0.5, -1.0)];
        assert_eq!(s.apply(&x), LinearMap::apply(&d, &x));
        let y = [
            Complex64::new(1.0, 1.0),
            Complex64::zero(),
            Complex64::new(-2.0, 0.0),
        ];
        assert_eq!(s.apply_adjoint(&y), LinearMap::apply_adjoint(&d, &y));
    }
}
