use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::SPARSE_BACKEND;
use crate::problem::StandardProblem;
use crate::shift::{ShiftConfig, ShiftEngine};

use super::state::{SolverState, StepTimings};
use super::step::{step_once, StepParams};

/// Shifts tried in one iteration before giving up.
pub const MAX_REJECTIONS: usize = 5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol_nres: f64,
    pub max_iter: usize,
    /// Per-step truncation bound relative to `‖CCᵀ‖_*` of the factor being
    /// truncated.
    pub trunc_rel: f64,
    /// Row cap of the residual factor; `None` means `10 r ℓ`.
    pub cap_cols: Option<usize>,
    /// Stop once `Ξ` has at least this many columns.
    pub xi_cap: Option<usize>,
    pub shift: ShiftConfig,
    /// Stop when `‖C‖_F² / ν₀` (the residual without the truncation debt)
    /// drops below `stall_tol`.
    pub stop_on_stall: bool,
    pub stall_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_nres: 1e-12,
            max_iter: 300,
            trunc_rel: 3.33e-15,
            cap_cols: None,
            xi_cap: None,
            shift: ShiftConfig::default(),
            stop_on_stall: false,
            stall_tol: 1e-10,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_nres > 0.0) || !(self.trunc_rel >= 0.0) || !(self.stall_tol > 0.0) {
            return Err(Error::Invalid("tolerances must be positive".into()));
        }
        if self.cap_cols == Some(0) {
            return Err(Error::Invalid("column cap must be positive".into()));
        }
        self.shift.validate()
    }

    /// Effective row cap of the residual factor for `p`.
    pub fn cap_for(&self, p: &StandardProblem) -> usize {
        self.cap_cols.unwrap_or(10 * p.r() * p.l().max(1))
    }

    pub fn step_params(&self, p: &StandardProblem) -> StepParams {
        StepParams { trunc_rel: self.trunc_rel, cap: self.cap_for(p) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub gamma: f64,
    pub nres: f64,
    pub cols_c: usize,
    pub cols_xi: usize,
    pub nu_omega: f64,
    pub timings: StepTimings,
    /// Shifts rejected before this one was accepted.
    pub rejected: usize,
    /// Singular values dropped because of the column cap.
    pub capped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    /// Zero right-hand side; `X = 0` is exact.
    ZeroRhs,
    MaxIter,
    /// The factor width bound was reached (flag `m`).
    WidthCap,
    /// Progress stalled under the truncation floor (flag `t`).
    Stall,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub converged: bool,
    pub reason: StopReason,
    pub iterations: usize,
    pub xi_cols: usize,
    pub final_nres: f64,
    pub wall_time: f64,
    /// `m` for a width stop, `t` for a stall stop, empty otherwise.
    pub flags: String,
    pub capped_total: usize,
    pub rejected_total: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub shift: String,
    /// Sparse solver used for the shifted systems.
    #[serde(default)]
    pub backend: String,
    pub records: Vec<IterationRecord>,
    pub summary: RunSummary,
}

impl RunReport {
    /// `nres` after every iteration.
    pub fn nres_history(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.nres).collect()
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.gamma).collect()
    }
}

/// A finished (or aborted) run: the last accepted state, the report and the
/// error that stopped the run, if any.
#[derive(Debug)]
pub struct RunOutcome {
    pub state: SolverState,
    pub report: RunReport,
    pub error: Option<Error>,
}

/// Runs the iteration to convergence, returning the error if it aborts.
pub fn radi_solve(p: &StandardProblem, opts: &SolveOptions) -> Result<(SolverState, RunReport)> {
    let out = radi_solve_traced(p, opts);
    match out.error {
        Some(e) => Err(e),
        None => Ok((out.state, out.report)),
    }
}

/// Runs the iteration and keeps the partial trace when it aborts.
pub fn radi_solve_traced(p: &StandardProblem, opts: &SolveOptions) -> RunOutcome {
    let start = Instant::now();
    let mut state = SolverState::new(p);
    let mut records = Vec::new();
    let finish = |state: SolverState, records: Vec<IterationRecord>, reason: StopReason, error: Option<Error>| {
        let final_nres = if state.nu0 > 0.0 { state.nres().unwrap_or(f64::NAN) } else { 0.0 };
        let flags = match reason {
            StopReason::WidthCap => "m",
            StopReason::Stall => "t",
            _ => "",
        };
        let summary = RunSummary {
            converged: matches!(reason, StopReason::Converged | StopReason::ZeroRhs),
            reason,
            iterations: state.k,
            xi_cols: state.xi_cols(),
            final_nres,
            wall_time: start.elapsed().as_secs_f64(),
            flags: flags.into(),
            capped_total: records.iter().map(|r: &IterationRecord| r.capped).sum(),
            rejected_total: records.iter().map(|r: &IterationRecord| r.rejected).sum(),
            error: error.as_ref().map(|e| e.to_string()),
        };
        RunOutcome { state, report: RunReport { shift: opts.shift.to_string(), backend: SPARSE_BACKEND.into(), records, summary }, error }
    };

    if let Err(e) = opts.validate() {
        return finish(state, records, StopReason::Failed, Some(e));
    }
    if !(state.nu0 > 0.0) {
        return finish(state, records, StopReason::ZeroRhs, None);
    }
    if opts.tol_nres >= 1.0 {
        return finish(state, records, StopReason::Converged, None);
    }
    let mut shifts = match ShiftEngine::new(opts.shift, p) {
        Ok(s) => s,
        Err(e) => return finish(state, records, StopReason::Failed, Some(e)),
    };
    let params = opts.step_params(p);

    while state.k < opts.max_iter {
        let mut rejected = 0;
        let mut t_shift = 0.0;
        let (next, scratch) = loop {
            let t = Instant::now();
            let gamma = match shifts.next(p, &state) {
                Ok(g) => g,
                Err(e) => return finish(state, records, StopReason::Failed, Some(e)),
            };
            t_shift += t.elapsed().as_secs_f64();
            match step_once(p, &state, gamma, params) {
                Ok(ok) => break ok,
                Err(e) if e.is_shift_recoverable() => {
                    rejected += 1;
                    if rejected >= MAX_REJECTIONS {
                        let iteration = state.k + 1;
                        let err = if matches!(e, Error::NotPositiveDefinite { .. }) {
                            Error::Breakdown { iteration, source: Box::new(e) }
                        } else {
                            Error::NoProgress { iteration, rejected }
                        };
                        return finish(state, records, StopReason::Failed, Some(err));
                    }
                }
                Err(e) => {
                    let iteration = state.k + 1;
                    return finish(state, records, StopReason::Failed, Some(Error::Breakdown { iteration, source: Box::new(e) }));
                }
            }
        };
        state = next;
        let nres = state.nres().unwrap_or(f64::NAN);
        records.push(IterationRecord {
            k: state.k,
            gamma: scratch.gamma,
            nres,
            cols_c: state.c.nrows(),
            cols_xi: state.xi_cols(),
            nu_omega: state.nu_omega,
            timings: StepTimings { shift: t_shift, ..scratch.timings },
            rejected,
            capped: scratch.trunc.capped,
        });
        if nres <= opts.tol_nres {
            return finish(state, records, StopReason::Converged, None);
        }
        if opts.stop_on_stall && state.c.norm_l2().powi(2) / state.nu0 < opts.stall_tol {
            return finish(state, records, StopReason::Stall, None);
        }
        if opts.xi_cap.is_some_and(|w| state.xi_cols() >= w) {
            return finish(state, records, StopReason::WidthCap, None);
        }
    }
    finish(state, records, StopReason::MaxIter, None)
}

/// Replays a fixed shift sequence without any stopping test.
pub fn replay(p: &StandardProblem, shifts: &[f64], params: StepParams) -> Result<Vec<SolverState>> {
    let mut states = vec![SolverState::new(p)];
    for &g in shifts {
        let (next, _) = step_once(p, states.last().expect("nonempty"), g, params)?;
        states.push(next);
    }
    Ok(states)
}
