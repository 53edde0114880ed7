//! The prototypical iteration that rewrites all coefficients explicitly in
//! every step. Dense and slow; it serves as a reference for the practical
//! iteration.

use faer::Mat;

use crate::dense::{lower_solve, lu_solve, upper_rsolve, upper_solve, vstack};
use crate::error::{Error, Result};
use crate::kernels::{chol_spd, stacked_gram, RowOrder, StackedMat};
use crate::problem::{DenseProblem, StandardProblem};

/// Largest dimension accepted by [`Alg1State`].
pub const ALG1_LIMIT: usize = 200;

#[derive(Debug, Clone)]
pub struct Alg1State {
    pub a: Mat<f64>,
    pub b: Mat<f64>,
    pub ahat: Vec<Mat<f64>>,
    pub bhat: Vec<Mat<f64>>,
    pub c: Mat<f64>,
    pub order: RowOrder,
    xi_blocks: Vec<Mat<f64>>,
}

impl Alg1State {
    /// Starts from the dense standard form of `p` (a mass matrix is folded
    /// into the coefficients; the unknown is unchanged).
    pub fn new(p: &StandardProblem) -> Result<Self> {
        if p.n() > ALG1_LIMIT {
            return Err(Error::TooLarge { n: p.n(), limit: ALG1_LIMIT });
        }
        Ok(Self::from_dense(p.to_dense()?.to_identity_mass()?, p.row_order()))
    }

    pub fn from_dense(d: DenseProblem, order: RowOrder) -> Self {
        Self { a: d.a, b: d.b, ahat: d.ahat, bhat: d.bhat, c: d.c, order, xi_blocks: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn x(&self) -> Mat<f64> {
        let n = self.n();
        let mut x = Mat::<f64>::zeros(n, n);
        for s in &self.xi_blocks {
            x += s.transpose() * s;
        }
        x
    }

    pub fn xi_cols(&self) -> usize {
        self.xi_blocks.iter().map(|s| s.nrows()).sum()
    }
}

/// One step with shift `gamma`.
pub fn alg1_step(st: &Alg1State, gamma: f64) -> Result<Alg1State> {
    if !(gamma > 0.0) {
        return Err(Error::ShiftRejected { gamma, reason: "shift must be positive".into() });
    }
    let n = st.n();
    let m = st.b.ncols();
    let l = st.c.nrows();
    let root = (2.0 * gamma).sqrt();
    let mut a_gamma = st.a.clone();
    for i in 0..n {
        a_gamma[(i, i)] -= gamma;
    }
    // C A_γ⁻¹ = (A_γ⁻ᵀ Cᵀ)ᵀ
    let ca = lu_solve(a_gamma.transpose(), st.c.transpose(), "A - γI")?.transpose().to_owned();
    let c_gamma = &ca * root;
    let y = &ca * &st.b;
    let yhat: Vec<Mat<f64>> = st.bhat.iter().map(|bi| &c_gamma * bi).collect();

    let mut g6 = &y * y.transpose();
    for i in 0..l {
        g6[(i, i)] += 1.0;
    }
    let p6 = chol_spd(g6.as_ref())?;
    let nf = p6.transpose().to_owned();
    let s = lower_solve(nf.as_ref(), c_gamma.as_ref());
    // (NNᵀ)⁻¹ C_γ
    let g6inv_cg = upper_solve(p6.as_ref(), s.as_ref());

    let yhat_stack = StackedMat::from_dense_blocks(yhat.clone(), l, m)?;
    let g13 = stacked_gram(g6.as_ref(), &yhat_stack, st.order);
    let mf = chol_spd(g13.as_ref())?.transpose().to_owned();
    let yt_g = y.transpose() * &g6inv_cg;
    let c_m: Vec<Mat<f64>> = st
        .ahat
        .iter()
        .zip(&yhat)
        .map(|(ai, yi)| &c_gamma * ai - yi * &yt_g * root)
        .collect();
    let flat = StackedMat::from_dense_blocks(c_m.clone(), l, n)?.to_dense(st.order);
    let bottom = lower_solve(mf.as_ref(), flat.as_ref());
    let mut c_new = vstack(&[(&st.c + &g6inv_cg * root).as_ref(), bottom.as_ref()]);

    let mut g10 = Mat::<f64>::identity(m, m);
    let mut cross = Mat::<f64>::zeros(m, n);
    for (yi, ci) in yhat.iter().zip(&c_m) {
        let nyi = lower_solve(nf.as_ref(), yi.as_ref());
        g10 += nyi.transpose() * &nyi;
        cross += nyi.transpose() * lower_solve(nf.as_ref(), ci.as_ref());
    }
    let k = chol_spd(g10.as_ref())?;
    // Lᵀ = K⁻ᵀ (N⁻¹Ŷ)ᵀ(N⁻¹C_M) + √(2γ) K Yᵀ (NNᵀ)⁻¹ C_γ
    let lt = lower_solve(k.transpose(), cross.as_ref()) + &k * &yt_g * root;
    let b = upper_rsolve(st.b.as_ref(), k.as_ref());
    let bhat: Vec<Mat<f64>> = st.bhat.iter().map(|bi| upper_rsolve(bi.as_ref(), k.as_ref())).collect();
    let a = &st.a - &b * &lt;
    let ahat = st.ahat.iter().zip(&bhat).map(|(ai, bi)| ai - bi * &lt).collect();

    if c_new.nrows() > n {
        // Same Gram matrix with at most n rows.
        c_new = c_new.qr().thin_R().to_owned();
    }
    let mut xi_blocks = st.xi_blocks.clone();
    xi_blocks.push(s);
    Ok(Alg1State { a, b, ahat, bhat, c: c_new, order: st.order, xi_blocks })
}
