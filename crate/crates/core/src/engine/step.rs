use std::time::Instant;

use faer::Mat;

use crate::dense::{fro_sq, lower_solve, upper_rsolve, upper_solve, vstack};
use crate::error::{Error, Result};
use crate::kernels::{chol_spd, ltimes, smw_solve, stacked_gram, trunc_svd, StackedMat};
use crate::problem::StandardProblem;

use super::state::{IterationScratch, SolverState, StepTimings};

/// Truncation settings of a single step.
#[derive(Debug, Clone, Copy)]
pub struct StepParams {
    /// Bound on the squared Frobenius norm dropped per step, relative to
    /// that of the factor being truncated.
    pub trunc_rel: f64,
    /// Most rows the residual factor may keep.
    pub cap: usize,
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

/// One step of the low-rank iteration with shift `gamma`.
///
/// The input state is left untouched; a failure (singular shifted matrix,
/// loss of definiteness) leaves the caller free to retry with another shift.
pub fn step_once(
    p: &StandardProblem,
    state: &SolverState,
    gamma: f64,
    params: StepParams,
) -> Result<(SolverState, IterationScratch)> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::ShiftRejected { gamma, reason: "shift must be positive and finite".into() });
    }
    let start = Instant::now();
    let order = p.row_order();
    let root = (2.0 * gamma).sqrt();

    // C (A + BF - γE)⁻¹ with the feedback applied through SMW.
    let t = Instant::now();
    let fac = p.pencil().factor(gamma)?;
    let smw = smw_solve(&fac, p.b().as_ref(), state.f.as_ref(), state.c.as_ref())?;
    let solve = secs(t);
    let c_gamma = &smw.x * root;
    let y = upper_rsolve(smw.xb.as_ref(), state.kpi.as_ref());

    let t = Instant::now();
    let c_m0 = ltimes(c_gamma.as_ref(), p.ahat())?;
    let yhat_raw = ltimes(c_gamma.as_ref(), p.bhat())?;
    let ltimes_t = secs(t);

    let l = state.c.nrows();
    let mut g6 = &y * y.transpose();
    for i in 0..l {
        g6[(i, i)] += 1.0;
    }
    let p6 = chol_spd(g6.as_ref())?;
    let n_factor = p6.transpose().to_owned();
    let s = lower_solve(n_factor.as_ref(), c_gamma.as_ref());

    let mut w = upper_solve(p6.as_ref(), s.as_ref()) * root;
    if let Some(e) = p.e() {
        w = e.left_mul_dense(&w)?;
    }
    let c_new = &state.c + &w;
    let kpi_yt = upper_solve(state.kpi.as_ref(), y.transpose());
    let mut f = &state.f - &kpi_yt * &w;

    let c_m = c_m0.add(&yhat_raw.mul_right(f.as_ref())?)?;
    let yhat_blocks: Vec<Mat<f64>> = yhat_raw
        .dense_blocks()
        .iter()
        .map(|yi| upper_rsolve(yi.as_ref(), state.kpi.as_ref()))
        .collect();
    let yhat = StackedMat::from_dense_blocks(yhat_blocks, l, p.m())?;

    let m = p.m();
    let mut g10 = Mat::<f64>::identity(m, m);
    let mut ztc = Mat::<f64>::zeros(m, p.n());
    for (i, yi) in yhat.dense_blocks().iter().enumerate() {
        let zi = upper_solve(p6.as_ref(), lower_solve(n_factor.as_ref(), yi.as_ref()).as_ref());
        g10 += yi.transpose() * &zi;
        ztc += zi.transpose() * c_m.dense_block(i);
    }
    let k_factor = chol_spd(g10.as_ref())?;
    let kpi = &k_factor * &state.kpi;
    f -= upper_solve(kpi.as_ref(), lower_solve(k_factor.transpose(), ztc.as_ref()).as_ref());

    let g13 = stacked_gram(g6.as_ref(), &yhat, order);
    let m_factor = chol_spd(g13.as_ref())?.transpose().to_owned();
    let bottom = lower_solve(m_factor.as_ref(), c_m.to_dense(order).as_ref());
    let stacked = vstack(&[c_new.as_ref(), bottom.as_ref()]);

    let t = Instant::now();
    let tau = params.trunc_rel * fro_sq(stacked.as_ref());
    let trunc = trunc_svd(stacked.as_ref(), tau, params.cap)?;
    let svd = secs(t);

    let mut next = state.clone();
    next.push(s.clone());
    next.f = f;
    next.kpi = kpi;
    next.c = trunc.factor();
    next.nu_omega += trunc.discarded_sq_trace;
    next.k += 1;

    let total = secs(start);
    let timings = StepTimings { shift: 0.0, solve, ltimes: ltimes_t, svd, other: (total - solve - ltimes_t - svd).max(0.0) };
    let scratch = IterationScratch {
        gamma,
        c_a: smw.x,
        c_ab: smw.xb,
        c_gamma,
        y,
        yhat,
        n_factor,
        s,
        c_m,
        k_factor,
        m_factor,
        stacked,
        trunc,
        timings,
    };
    Ok((next, scratch))
}
