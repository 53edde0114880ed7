//! The low-rank iteration with accumulated feedback.

mod solve;
mod state;
mod step;

pub use solve::{
    radi_solve, radi_solve_traced, replay, IterationRecord, RunOutcome, RunReport, RunSummary, SolveOptions, StopReason,
    MAX_REJECTIONS,
};
pub use state::{nres_trace, IterationScratch, SolverState, StepTimings, HISTORY_LIMIT};
pub use step::{step_once, StepParams};
