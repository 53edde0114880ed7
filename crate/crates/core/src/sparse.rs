//! Compressed sparse row storage for the large coefficient matrices.
//!
//! Only the handful of products the solver needs are provided. Linear
//! solves go through [`crate::kernels::shifted`], which hands the pattern
//! to a sparse LU backend.

use faer::Mat;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMat {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMat {
    /// Builds a matrix from `(row, col, value)` entries. Duplicates are summed;
    /// explicit zeros are kept so that patterns can be shared.
    pub fn from_triplets(nrows: usize, ncols: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for &(i, j, v) in entries {
            if i >= nrows || j >= ncols {
                return Err(Error::Invalid(format!(
                    "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
            sorted.push((i, j, v));
        }
        sorted.sort_by_key(|t| (t.0, t.1));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
            last = Some((i, j));
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { nrows, ncols, row_ptr, col_idx, values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    /// Drops exact zeros below `tol` in magnitude from a dense matrix.
    pub fn from_dense(m: &Mat<f64>, tol: f64) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.abs() > tol {
                    entries.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &entries).expect("indices in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    /// Iterates `(col, value)` over the stored entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.nrows == self.ncols
            && self.nnz() == self.nrows
            && (0..self.nrows).all(|i| {
                let mut it = self.row(i);
                matches!(it.next(), Some((j, v)) if j == i && v == 1.0)
            })
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut out = Mat::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                out[(i, j)] += v;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let entries: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &entries).expect("indices in range")
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `alpha * self + beta * other` on the union pattern.
    pub fn add_scaled(&self, alpha: f64, other: &SparseMat, beta: f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::dims("sparse add", self.shape(), other.shape()));
        }
        let mut entries: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (i, j, alpha * v)).collect();
        entries.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, beta * v)));
        Self::from_triplets(self.nrows, self.ncols, &entries)
    }

    /// Keeps the pattern and replaces every stored value with `f(value)`.
    pub fn map_values(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = f(*v));
        out
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.nnz());
        Self { values, ..self.clone() }
    }

    pub fn norm_fro(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut sums = vec![0.0; self.ncols];
        for (&j, &v) in self.col_idx.iter().zip(&self.values) {
            sums[j] += v.abs();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// `self * x`.
    pub fn mul_dense(&self, x: &Mat<f64>) -> Result<Mat<f64>> {
        if self.ncols != x.nrows() {
            return Err(Error::dims("sparse * dense", self.shape(), (x.nrows(), x.ncols())));
        }
        let mut out = Mat::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            let xc = x.col(c);
            let mut oc = out.col_mut(c);
            for i in 0..self.nrows {
                let mut acc = 0.0;
                for (j, v) in self.row(i) {
                    acc += v * xc[j];
                }
                oc[i] = acc;
            }
        }
        Ok(out)
    }

    /// `self^T * x`.
    pub fn tmul_dense(&self, x: &Mat<f64>) -> Result<Mat<f64>> {
        if self.nrows != x.nrows() {
            return Err(Error::dims("sparse^T * dense", (self.ncols, self.nrows), (x.nrows(), x.ncols())));
        }
        let mut out = Mat::zeros(self.ncols, x.ncols());
        for c in 0..x.ncols() {
            let xc = x.col(c);
            let mut oc = out.col_mut(c);
            for i in 0..self.nrows {
                let xi = xc[i];
                if xi == 0.0 {
                    continue;
                }
                for (j, v) in self.row(i) {
                    oc[j] += v * xi;
                }
            }
        }
        Ok(out)
    }

    /// `x * self`, the row-space product used for residual factors.
    pub fn left_mul_dense(&self, x: &Mat<f64>) -> Result<Mat<f64>> {
        if x.ncols() != self.nrows {
            return Err(Error::dims("dense * sparse", (x.nrows(), x.ncols()), self.shape()));
        }
        let mut out = Mat::zeros(x.nrows(), self.ncols);
        for q in 0..self.nrows {
            let xq = x.col(q);
            for (j, v) in self.row(q) {
                let mut oj = out.col_mut(j);
                for p in 0..x.nrows() {
                    oj[p] += v * xq[p];
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SparseMat {
        SparseMat::from_triplets(3, 3, &[(0, 0, 2.0), (0, 2, 1.0), (1, 1, -1.0), (2, 0, 4.0), (2, 0, 1.0)]).unwrap()
    }

    #[test]
    fn duplicates_are_summed() {
        let s = sample();
        assert_eq!(s.nnz(), 4);
        assert_eq!(s.to_dense()[(2, 0)], 5.0);
    }

    #[test]
    fn products_match_dense() {
        let s = sample();
        let d = s.to_dense();
        let x = Mat::from_fn(3, 2, |i, j| (i as f64) - 0.5 * j as f64 + 1.0);
        let y = Mat::from_fn(2, 3, |i, j| (i * 3 + j) as f64 * 0.25 - 1.0);
        assert!((s.mul_dense(&x).unwrap() - &d * &x).norm_l2() < 1e-14);
        assert!((s.tmul_dense(&x).unwrap() - d.transpose() * &x).norm_l2() < 1e-14);
        assert!((s.left_mul_dense(&y).unwrap() - &y * &d).norm_l2() < 1e-14);
    }

    #[test]
    fn out_of_range_entry_is_rejected() {
        assert!(SparseMat::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn identity_detection() {
        assert!(SparseMat::identity(4).is_identity());
        assert!(!sample().is_identity());
        assert_eq!(sample().norm_one(), 7.0);
    }
}
