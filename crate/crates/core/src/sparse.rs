//! Minimal compressed-sparse-column matrices.
//!
//! Assembly produces triplets; reductions need transposes, mat-vecs and
//! sparse products (Gustavson's algorithm). Conversion to `faer` happens
//! only at the solver boundary.

use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub struct SpMat {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SpMat {
    /// Build from triplets; duplicate entries are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, trips: &[(usize, usize, f64)]) -> Self {
        let mut count = vec![0usize; ncols + 1];
        for &(_, c, _) in trips {
            debug_assert!(c < ncols);
            count[c + 1] += 1;
        }
        for c in 0..ncols {
            count[c + 1] += count[c];
        }
        let mut rows = vec![0usize; trips.len()];
        let mut vals = vec![0.0; trips.len()];
        let mut cursor = count.clone();
        for &(r, c, v) in trips {
            debug_assert!(r < nrows);
            let slot = cursor[c];
            rows[slot] = r;
            vals[slot] = v;
            cursor[c] += 1;
        }
        // sort rows within each column and merge duplicates
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut out_rows = Vec::with_capacity(trips.len());
        let mut out_vals = Vec::with_capacity(trips.len());
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for c in 0..ncols {
            scratch.clear();
            for i in count[c]..count[c + 1] {
                scratch.push((rows[i], vals[i]));
            }
            scratch.sort_unstable_by_key(|e| e.0);
            let mut i = 0;
            while i < scratch.len() {
                let r = scratch[i].0;
                let mut v = scratch[i].1;
                i += 1;
                while i < scratch.len() && scratch[i].0 == r {
                    v += scratch[i].1;
                    i += 1;
                }
                out_rows.push(r);
                out_vals.push(v);
            }
            col_ptr[c + 1] = out_rows.len();
        }
        SpMat { nrows, ncols, col_ptr, row_idx: out_rows, vals: out_vals }
    }

    pub fn identity(n: usize) -> Self {
        SpMat {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn col(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.col_ptr[c]..self.col_ptr[c + 1]).map(move |i| (self.row_idx[i], self.vals[i]))
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |c| self.col(c).map(move |(r, v)| (r, c, v)))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for c in 0..self.ncols {
            let xc = x[c];
            if xc != 0.0 {
                for i in self.col_ptr[c]..self.col_ptr[c + 1] {
                    y[self.row_idx[i]] += self.vals[i] * xc;
                }
            }
        }
        y
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for c in 0..self.ncols {
            let mut acc = 0.0;
            for i in self.col_ptr[c]..self.col_ptr[c + 1] {
                acc += self.vals[i] * x[self.row_idx[i]];
            }
            y[c] = acc;
        }
        y
    }

    pub fn transpose(&self) -> SpMat {
        let trips: Vec<_> = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        SpMat::from_triplets(self.ncols, self.nrows, &trips)
    }

    /// self * other, Gustavson column-by-column.
    pub fn matmul(&self, other: &SpMat) -> SpMat {
        assert_eq!(self.ncols, other.nrows);
        let mut col_ptr = vec![0usize; other.ncols + 1];
        let mut row_idx = Vec::new();
        let mut vals = Vec::new();
        let mut dense = vec![0.0f64; self.nrows];
        let mut mark = vec![usize::MAX; self.nrows];
        let mut touched: Vec<usize> = Vec::new();
        for j in 0..other.ncols {
            for (k, bkj) in other.col(j) {
                for i in self.col_ptr[k]..self.col_ptr[k + 1] {
                    let r = self.row_idx[i];
                    if mark[r] != j {
                        mark[r] = j;
                        dense[r] = 0.0;
                        touched.push(r);
                    }
                    dense[r] += self.vals[i] * bkj;
                }
            }
            touched.sort_unstable();
            for &r in &touched {
                row_idx.push(r);
                vals.push(dense[r]);
            }
            touched.clear();
            col_ptr[j + 1] = row_idx.len();
        }
        SpMat { nrows: self.nrows, ncols: other.ncols, col_ptr, row_idx, vals }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn from_dense(m: &DMatrix<f64>, drop_tol: f64) -> SpMat {
        let mut trips = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if v.abs() > drop_tol {
                    trips.push((r, c, v));
                }
            }
        }
        SpMat::from_triplets(m.nrows(), m.ncols(), &trips)
    }

    /// Maximum absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = SpMat::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 5.0)]);
        assert_eq!(m.nnz(), 2);
        let d = m.to_dense();
        assert_eq!(d[(0, 0)], 3.0);
        assert_eq!(d[(1, 1)], 5.0);
    }

    #[test]
    fn matmul_matches_dense() {
        let a = SpMat::from_triplets(
            3,
            2,
            &[(0, 0, 1.0), (2, 0, -2.0), (1, 1, 4.0), (2, 1, 0.5)],
        );
        let b = SpMat::from_triplets(2, 3, &[(0, 0, 2.0), (1, 0, 1.0), (0, 2, -1.0), (1, 1, 3.0)]);
        let c = a.matmul(&b);
        let want = a.to_dense() * b.to_dense();
        assert_eq!(c.to_dense(), want);
        let ct = c.transpose();
        assert_eq!(ct.to_dense(), want.transpose());
    }

    #[test]
    fn matvec_roundtrip() {
        let a = SpMat::from_triplets(3, 3, &[(0, 1, 2.0), (1, 0, -1.0), (2, 2, 3.0)]);
        let x = vec![1.0, 2.0, 3.0];
        assert_eq!(a.matvec(&x), vec![4.0, -1.0, 9.0]);
        assert_eq!(a.matvec_transpose(&x), vec![-2.0, 2.0, 9.0]);
    }
}
