//! Small dense helpers shared by the kernels, the engine and the oracles.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Mat, MatRef, Par};

use crate::error::{Error, Result};

pub fn shape(m: MatRef<'_, f64>) -> (usize, usize) {
    (m.nrows(), m.ncols())
}

/// `L^{-1} rhs` for lower-triangular `L`.
pub fn lower_solve(l: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = rhs.to_owned();
    solve_lower_triangular_in_place(l, out.as_mut(), Par::Seq);
    out
}

/// `U^{-1} rhs` for upper-triangular `U`.
pub fn upper_solve(u: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = rhs.to_owned();
    solve_upper_triangular_in_place(u, out.as_mut(), Par::Seq);
    out
}

/// `rhs U^{-1}` for upper-triangular `U`.
pub fn upper_rsolve(rhs: MatRef<'_, f64>, u: MatRef<'_, f64>) -> Mat<f64> {
    // X U = R  <=>  U^T X^T = R^T
    let mut out = rhs.transpose().to_owned();
    solve_lower_triangular_in_place(u.transpose(), out.as_mut(), Par::Seq);
    out.transpose().to_owned()
}

pub fn vstack(parts: &[MatRef<'_, f64>]) -> Mat<f64> {
    let ncols = parts.iter().map(|p| p.ncols()).find(|&c| c > 0).unwrap_or(0);
    let nrows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = Mat::zeros(nrows, ncols);
    let mut r = 0;
    for p in parts {
        if p.nrows() == 0 {
            continue;
        }
        assert_eq!(p.ncols(), ncols, "vstack column mismatch");
        out.submatrix_mut(r, 0, p.nrows(), ncols).copy_from(p);
        r += p.nrows();
    }
    out
}

pub fn hstack(parts: &[MatRef<'_, f64>]) -> Mat<f64> {
    let nrows = parts.iter().map(|p| p.nrows()).find(|&r| r > 0).unwrap_or(0);
    let ncols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = Mat::zeros(nrows, ncols);
    let mut c = 0;
    for p in parts {
        if p.ncols() == 0 {
            continue;
        }
        assert_eq!(p.nrows(), nrows, "hstack row mismatch");
        out.submatrix_mut(0, c, nrows, p.ncols()).copy_from(p);
        c += p.ncols();
    }
    out
}

pub fn symmetrize(m: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

pub fn fro_sq(m: MatRef<'_, f64>) -> f64 {
    let n = m.norm_l2();
    n * n
}

/// `||a - b||_F / ||a||_F`, or the absolute difference when `a` vanishes.
pub fn rel_diff(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    let num = (a - b).norm_l2();
    let den = a.norm_l2();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

pub fn trace(m: MatRef<'_, f64>) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Dense LU solve `a^{-1} b`, rejecting numerically singular `a`.
pub fn lu_solve(a: MatRef<'_, f64>, b: MatRef<'_, f64>, what: &'static str) -> Result<Mat<f64>> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::dims(what, shape(a), shape(b)));
    }
    if a.nrows() == 0 {
        return Ok(Mat::zeros(0, b.ncols()));
    }
    let lu = a.partial_piv_lu();
    check_pivots(lu.U(), what)?;
    let x = lu.solve(b);
    if !all_finite(x.as_ref()) {
        return Err(Error::Singular(what));
    }
    Ok(x)
}

pub fn lu_inverse(a: MatRef<'_, f64>, what: &'static str) -> Result<Mat<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::dims(what, shape(a), shape(a)));
    }
    if a.nrows() == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let lu = a.partial_piv_lu();
    check_pivots(lu.U(), what)?;
    Ok(lu.inverse())
}

fn check_pivots(u: MatRef<'_, f64>, what: &'static str) -> Result<()> {
    let n = u.nrows();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let d = u[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if !(lo.is_finite() && hi.is_finite()) || lo <= hi * f64::EPSILON * n as f64 {
        return Err(Error::Singular(what));
    }
    Ok(())
}

pub fn all_finite(m: MatRef<'_, f64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].is_finite()))
}

pub fn kron(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let (p, q) = shape(b);
    Mat::from_fn(a.nrows() * p, a.ncols() * q, |i, j| a[(i / p, j / q)] * b[(i % p, j % q)])
}

/// `a ⊗ I_t`.
pub fn kron_eye_right(a: MatRef<'_, f64>, t: usize) -> Mat<f64> {
    kron(a, Mat::<f64>::identity(t, t).as_ref())
}

/// `I_t ⊗ a`.
pub fn kron_eye_left(t: usize, a: MatRef<'_, f64>) -> Mat<f64> {
    kron(Mat::<f64>::identity(t, t).as_ref(), a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_helpers() {
        let u = Mat::from_fn(3, 3, |i, j| if j >= i { 1.0 + (i + 2 * j) as f64 } else { 0.0 });
        let r = Mat::from_fn(2, 3, |i, j| (i + j) as f64 - 1.0);
        let x = upper_rsolve(r.as_ref(), u.as_ref());
        assert!((&x * &u - &r).norm_l2() < 1e-13);
        let b = r.transpose().to_owned();
        let y = upper_solve(u.as_ref(), b.as_ref());
        assert!((&u * &y - &b).norm_l2() < 1e-13);
        let lt = u.transpose().to_owned();
        let z = lower_solve(lt.as_ref(), b.as_ref());
        assert!((&lt * &z - &b).norm_l2() < 1e-13);
    }

    #[test]
    fn singular_lu_is_rejected() {
        let a = Mat::from_fn(2, 2, |_, _| 1.0);
        let b = Mat::<f64>::identity(2, 2);
        assert!(matches!(lu_solve(a.as_ref(), b.as_ref(), "t"), Err(Error::Singular(_))));
    }

    #[test]
    fn stacking_skips_empty_parts() {
        let a = Mat::from_fn(1, 2, |_, j| j as f64);
        let e = Mat::<f64>::zeros(0, 0);
        let s = vstack(&[a.as_ref(), e.as_ref(), a.as_ref()]);
        assert_eq!((s.nrows(), s.ncols()), (2, 2));
    }
}
