use faer::{Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which SVD route produced a [`TruncationResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvdRoute {
    CrossProduct,
    Direct,
    Trivial,
}

/// The retained part `Σ Vᵀ` of a truncated SVD plus the energy that was dropped.
#[derive(Debug, Clone)]
pub struct TruncationResult {
    /// Retained singular values, nonincreasing and positive.
    pub sigma: Vec<f64>,
    /// Left singular vectors of the retained values (`p x k`).
    pub u: Mat<f64>,
    /// Retained right factor (`k x n`).
    pub vt: Mat<f64>,
    /// Sum of the squared discarded singular values.
    pub discarded_sq_trace: f64,
    /// Number of values that the cap moved into the discarded part.
    pub capped: usize,
    pub route: SvdRoute,
}

impl TruncationResult {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `Σ Vᵀ`, the replacement for the input factor.
    pub fn factor(&self) -> Mat<f64> {
        Mat::from_fn(self.vt.nrows(), self.vt.ncols(), |i, j| self.sigma[i] * self.vt[(i, j)])
    }

    pub fn retained_sq(&self) -> f64 {
        self.sigma.iter().map(|s| s * s).sum()
    }
}

/// Below this ratio `σ_k² / σ_1²` the cross-product route has lost too many
/// digits and the direct SVD is used instead.
const CROSS_PRODUCT_FLOOR: f64 = 1e-8;

/// Truncated SVD of `c` keeping the fewest leading singular values whose
/// discarded squares sum to at most `tau_abs`, then at most `cap` of them.
pub fn trunc_svd(c: MatRef<'_, f64>, tau_abs: f64, cap: usize) -> Result<TruncationResult> {
    if !(tau_abs >= 0.0) {
        return Err(Error::Invalid(format!("truncation threshold {tau_abs} must be nonnegative")));
    }
    let (p, n) = (c.nrows(), c.ncols());
    if p == 0 || n == 0 || c.norm_l2() == 0.0 {
        return Ok(empty(p, n));
    }

    // Cross-product route: eigen-decompose C Cᵀ and form Σ Vᵀ = Uᵀ C.
    let gram = c * c.transpose();
    let eig = gram.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Oracle(format!("eigensolver: {e:?}")))?;
    let vals = eig.S().column_vector();
    let order: Vec<usize> = (0..p).rev().collect();
    let lam: Vec<f64> = order.iter().map(|&i| vals[i].max(0.0)).collect();
    let (keep, capped) = retained_count(&lam, tau_abs, cap);
    if keep == 0 {
        return Ok(TruncationResult { discarded_sq_trace: lam.iter().sum(), capped, ..empty(p, n) });
    }
    if lam[keep - 1] >= CROSS_PRODUCT_FLOOR * lam[0] {
        let vecs = eig.U();
        let u = Mat::from_fn(p, keep, |i, j| vecs[(i, order[j])]);
        let factor = u.transpose() * c;
        let sigma: Vec<f64> = lam[..keep].iter().map(|l| l.sqrt()).collect();
        let vt = Mat::from_fn(keep, n, |i, j| factor[(i, j)] / sigma[i]);
        return Ok(TruncationResult {
            discarded_sq_trace: lam[keep..].iter().sum(),
            sigma,
            u,
            vt,
            capped,
            route: SvdRoute::CrossProduct,
        });
    }
    direct(c, tau_abs, cap)
}

fn direct(c: MatRef<'_, f64>, tau_abs: f64, cap: usize) -> Result<TruncationResult> {
    let (p, n) = (c.nrows(), c.ncols());
    let svd = c.thin_svd().map_err(|e| Error::Oracle(format!("svd: {e:?}")))?;
    let s = svd.S().column_vector();
    let sq: Vec<f64> = (0..s.nrows()).map(|i| s[i] * s[i]).collect();
    let (mut keep, capped) = retained_count(&sq, tau_abs, cap);
    while keep > 0 && !(s[keep - 1] > 0.0) {
        keep -= 1;
    }
    Ok(TruncationResult {
        sigma: (0..keep).map(|i| s[i]).collect(),
        u: svd.U().submatrix(0, 0, p, keep).to_owned(),
        vt: svd.V().submatrix(0, 0, n, keep).transpose().to_owned(),
        discarded_sq_trace: sq[keep..].iter().sum(),
        capped,
        route: SvdRoute::Direct,
    })
}

/// Smallest `k` with `sum(sq[k..]) <= tau`, then clipped to `cap`.
/// Returns `(k, number clipped by the cap)`.
fn retained_count(sq: &[f64], tau: f64, cap: usize) -> (usize, usize) {
    let mut k = sq.len();
    let mut tail = 0.0;
    while k > 0 && tail + sq[k - 1] <= tau {
        tail += sq[k - 1];
        k -= 1;
    }
    // Exact zeros never count as retained.
    while k > 0 && sq[k - 1] == 0.0 {
        k -= 1;
    }
    let clipped = k.min(cap);
    (clipped, k - clipped)
}

fn empty(p: usize, n: usize) -> TruncationResult {
    TruncationResult {
        sigma: Vec::new(),
        u: Mat::zeros(p, 0),
        vt: Mat::zeros(0, n),
        discarded_sq_trace: 0.0,
        capped: 0,
        route: SvdRoute::Trivial,
    }
}
