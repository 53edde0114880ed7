use std::collections::VecDeque;

use faer::Mat;

use crate::error::{Error, Result};
use crate::kernels::{StackedMat, TruncationResult};
use crate::problem::StandardProblem;

/// Most residual factors kept for shift generation.
pub const HISTORY_LIMIT: usize = 8;

/// Everything the iteration carries from one step to the next.
#[derive(Debug, Clone)]
pub struct SolverState {
    /// Row blocks `S` of `Ξᵀ`, one per iteration.
    xi_blocks: Vec<Mat<f64>>,
    /// Accumulated feedback (`m x n`); the current closed loop is `A + BF`.
    pub f: Mat<f64>,
    /// Upper-triangular accumulator with `B_(k) = B Kpi⁻¹`.
    pub kpi: Mat<f64>,
    /// Current residual factor.
    pub c: Mat<f64>,
    pub nu0: f64,
    /// Sum of the squared Frobenius norms of everything truncated so far.
    pub nu_omega: f64,
    pub k: usize,
    /// The most recent `S` factors, newest last.
    pub s_history: VecDeque<Mat<f64>>,
}

impl SolverState {
    pub fn new(p: &StandardProblem) -> Self {
        let c = p.c().clone();
        let nu0 = c.norm_l2().powi(2);
        Self {
            xi_blocks: Vec::new(),
            f: p.f0().clone(),
            kpi: p.kpi0().clone(),
            c,
            nu0,
            nu_omega: 0.0,
            k: 0,
            s_history: VecDeque::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.c.ncols()
    }

    pub fn xi_cols(&self) -> usize {
        self.xi_blocks.iter().map(|s| s.nrows()).sum()
    }

    pub fn xi_blocks(&self) -> &[Mat<f64>] {
        &self.xi_blocks
    }

    /// The solution factor `Ξ` (`n x w`), `X ≈ ΞΞᵀ`.
    pub fn xi(&self) -> Mat<f64> {
        let refs: Vec<_> = self.xi_blocks.iter().map(|s| s.as_ref()).collect();
        let stacked = crate::dense::vstack(&refs);
        if stacked.nrows() == 0 {
            return Mat::zeros(self.n(), 0);
        }
        stacked.transpose().to_owned()
    }

    /// `ΞΞᵀ` as a dense matrix.
    pub fn x_dense(&self) -> Mat<f64> {
        let n = self.n();
        let mut x = Mat::<f64>::zeros(n, n);
        for s in &self.xi_blocks {
            x += s.transpose() * s;
        }
        x
    }

    /// `(‖C‖_F² + ν_Ω) / ν₀`.
    pub fn nres(&self) -> Result<f64> {
        nres_trace(self)
    }

    pub(crate) fn push(&mut self, s: Mat<f64>) {
        self.s_history.push_back(s.clone());
        while self.s_history.len() > HISTORY_LIMIT {
            self.s_history.pop_front();
        }
        self.xi_blocks.push(s);
    }
}

/// Trace-norm normalized residual including the truncation debt.
pub fn nres_trace(state: &SolverState) -> Result<f64> {
    if !(state.nu0 > 0.0) {
        return Err(Error::Degenerate);
    }
    Ok((state.c.norm_l2().powi(2) + state.nu_omega) / state.nu0)
}

/// Wall time spent in each part of one iteration, in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepTimings {
    pub shift: f64,
    pub solve: f64,
    pub ltimes: f64,
    pub svd: f64,
    pub other: f64,
}

impl StepTimings {
    pub fn total(&self) -> f64 {
        self.shift + self.solve + self.ltimes + self.svd + self.other
    }
}

/// Intermediate quantities of one iteration, kept for inspection and tests.
#[derive(Debug, Clone)]
pub struct IterationScratch {
    pub gamma: f64,
    /// `C (A + BF - γE)⁻¹`.
    pub c_a: Mat<f64>,
    /// `C_A B (I + F_A B)⁻¹`.
    pub c_ab: Mat<f64>,
    pub c_gamma: Mat<f64>,
    pub y: Mat<f64>,
    /// `Ŷ Kpi⁻¹` as used from step 10 on.
    pub yhat: StackedMat,
    /// Lower-triangular `N` with `NNᵀ = I + YYᵀ`.
    pub n_factor: Mat<f64>,
    pub s: Mat<f64>,
    /// `C_γ ⋉ Â` plus the feedback correction.
    pub c_m: StackedMat,
    /// Upper-triangular `K`.
    pub k_factor: Mat<f64>,
    /// Lower-triangular `M`.
    pub m_factor: Mat<f64>,
    /// `[C; M⁻¹C_M]` before truncation.
    pub stacked: Mat<f64>,
    pub trunc: TruncationResult,
    pub timings: StepTimings,
}

impl IterationScratch {
    /// `ΩᵀΩ` of this step's truncation, formed densely.
    pub fn omega_gram(&self) -> Mat<f64> {
        let kept = self.trunc.factor();
        self.stacked.transpose() * &self.stacked - kept.transpose() * &kept
    }
}
