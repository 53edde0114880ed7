use faer::{Mat, MatRef, Side};

use crate::dense::shape;
use crate::error::{Error, Result};

/// Upper-triangular `P` with `P^T P = M` for symmetric positive definite `M`.
///
/// Only the lower triangle of `M` is read.
pub fn chol_spd(m: MatRef<'_, f64>) -> Result<Mat<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::dims("cholesky", shape(m), shape(m)));
    }
    let k = m.nrows();
    if k == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let llt = m.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite { pivot: first_bad_pivot(m) })?;
    let p = llt.L().transpose().to_owned();
    if (0..k).any(|i| !(p[(i, i)] > 0.0 && p[(i, i)].is_finite())) {
        return Err(Error::NotPositiveDefinite { pivot: first_bad_pivot(m) });
    }
    Ok(p)
}

/// Index of the first non-positive pivot of an unpivoted LDLᵀ sweep.
fn first_bad_pivot(m: MatRef<'_, f64>) -> usize {
    let k = m.nrows();
    let mut l = Mat::<f64>::zeros(k, k);
    for j in 0..k {
        let mut d = m[(j, j)];
        for p in 0..j {
            d -= l[(j, p)] * l[(j, p)];
        }
        if !(d > 0.0) {
            return j;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..k {
            let mut s = m[(i, j)];
            for p in 0..j {
                s -= l[(i, p)] * l[(j, p)];
            }
            l[(i, j)] = s / d;
        }
    }
    k.saturating_sub(1)
}
