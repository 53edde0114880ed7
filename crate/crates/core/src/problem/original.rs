use faer::Mat;

use crate::dense::{lu_solve, shape};
use crate::error::{Error, Result};
use crate::kernels::chol_spd;
use crate::sparse::SparseMat;

/// A SCARE in its original form with weights `Q`, `L`, `R`:
///
/// `Q + A₀ᵀXE + EᵀXA₀ + Σ AᵢᵀXAᵢ = (L + EᵀXB₀ + Σ AᵢᵀXBᵢ)(R + Σ BᵢᵀXBᵢ)⁻¹(*)ᵀ`
///
/// with `Q = CᵀC + L R⁻¹ Lᵀ`.
#[derive(Debug, Clone)]
pub struct OriginalProblem {
    a: Vec<SparseMat>,
    b: Vec<Mat<f64>>,
    c: Mat<f64>,
    l: Mat<f64>,
    weight: Mat<f64>,
    e: Option<SparseMat>,
}

impl OriginalProblem {
    /// `a` and `b` hold `A₀..A_{r-1}` and `B₀..B_{r-1}`. `l = None` means `L = 0`.
    pub fn new(
        a: Vec<SparseMat>,
        b: Vec<Mat<f64>>,
        c: Mat<f64>,
        l: Option<Mat<f64>>,
        weight: Mat<f64>,
        e: Option<SparseMat>,
    ) -> Result<Self> {
        let r = a.len();
        if r == 0 || b.len() != r {
            return Err(Error::Invalid(format!("need r >= 1 matching A and B lists, got {} and {}", a.len(), b.len())));
        }
        let n = a[0].nrows();
        let m = b[0].ncols();
        for ai in &a {
            if ai.shape() != (n, n) {
                return Err(Error::dims("A_i", (n, n), ai.shape()));
            }
        }
        for bi in &b {
            if shape(bi.as_ref()) != (n, m) {
                return Err(Error::dims("B_i", (n, m), shape(bi.as_ref())));
            }
        }
        if c.ncols() != n {
            return Err(Error::dims("C", (c.nrows(), n), shape(c.as_ref())));
        }
        let l = l.unwrap_or_else(|| Mat::zeros(n, m));
        if shape(l.as_ref()) != (n, m) {
            return Err(Error::dims("L", (n, m), shape(l.as_ref())));
        }
        if shape(weight.as_ref()) != (m, m) {
            return Err(Error::dims("R", (m, m), shape(weight.as_ref())));
        }
        if let Some(e) = &e {
            if e.shape() != (n, n) {
                return Err(Error::dims("E", (n, n), e.shape()));
            }
        }
        let p = Self { a, b, c, l, weight, e };
        p.weight_factor()?;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.a[0].nrows()
    }

    pub fn m(&self) -> usize {
        self.b[0].ncols()
    }

    pub fn r(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[SparseMat] {
        &self.a
    }

    pub fn b(&self) -> &[Mat<f64>] {
        &self.b
    }

    pub fn c(&self) -> &Mat<f64> {
        &self.c
    }

    pub fn l(&self) -> &Mat<f64> {
        &self.l
    }

    pub fn weight(&self) -> &Mat<f64> {
        &self.weight
    }

    pub fn e(&self) -> Option<&SparseMat> {
        self.e.as_ref()
    }

    pub fn has_cross_term(&self) -> bool {
        self.l.norm_l2() != 0.0
    }

    /// Upper-triangular `P` with `PᵀP = R`.
    pub fn weight_factor(&self) -> Result<Mat<f64>> {
        let sym_err = (&self.weight - self.weight.transpose()).norm_l2();
        if sym_err > 1e-12 * self.weight.norm_l2().max(1.0) {
            return Err(Error::WeightNotPositiveDefinite);
        }
        chol_spd(self.weight.as_ref()).map_err(|_| Error::WeightNotPositiveDefinite)
    }

    /// `R⁻¹ Lᵀ` (`m x n`).
    pub fn gain(&self) -> Result<Mat<f64>> {
        lu_solve(self.weight.as_ref(), self.l.transpose(), "R")
    }
}
