//! Trace and summary emission.

use std::fmt::Write as _;

use scare_core::engine::{RunReport, StepTimings, StopReason};

pub const CSV_HEADER: &str = "iter,gamma,nres,cols_C,cols_Xi,nu_omega,t_shift,t_solve,t_ltimes,t_svd,t_other";

/// Per-iteration trace including the initial row `iter = 0`, whose `nres`
/// is 1 (0 for a zero right-hand side) and whose shift field is empty.
pub fn trace_csv(report: &RunReport, l: usize) -> String {
    let mut s = String::with_capacity(64 * (report.records.len() + 2));
    s.push_str(CSV_HEADER);
    s.push('\n');
    let nres0 = if report.summary.reason == StopReason::ZeroRhs { 0.0 } else { 1.0 };
    let _ = writeln!(s, "0,,{nres0},{l},0,0,0,0,0,0,0");
    for r in &report.records {
        let t = &r.timings;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.k, r.gamma, r.nres, r.cols_c, r.cols_xi, r.nu_omega, t.shift, t.solve, t.ltimes, t.svd, t.other
        );
    }
    s
}

/// One line of the `(ite, dim, time, remark)` table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub ite: usize,
    pub dim: usize,
    pub time: f64,
    pub remark: String,
}

impl SummaryRow {
    pub fn new(label: impl Into<String>, report: &RunReport) -> Self {
        let s = &report.summary;
        let remark = match (&s.error, s.flags.as_str(), s.converged) {
            (Some(e), _, _) => format!("failed: {e}"),
            (None, "", true) => String::new(),
            (None, "", false) => format!("{:.3e}", s.final_nres),
            (None, f, _) => format!("{f} {:.3e}", s.final_nres),
        };
        Self { label: label.into(), ite: s.iterations, dim: s.xi_cols, time: s.wall_time, remark }
    }
}

pub fn summary_table(rows: &[SummaryRow]) -> String {
    let w = rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(5);
    let mut s = format!("{:<w$}  {:>5}  {:>7}  {:>10}  remark\n", "shift", "ite", "dim", "time");
    for r in rows {
        let _ = writeln!(s, "{:<w$}  {:>5}  {:>7}  {:>10.3}  {}", r.label, r.ite, r.dim, r.time, r.remark);
    }
    s
}

/// The report with every clock reading zeroed; two runs of the same cell
/// must agree on this exactly.
pub fn without_timings(report: &RunReport) -> RunReport {
    let mut r = report.clone();
    r.summary.wall_time = 0.0;
    for rec in &mut r.records {
        rec.timings = StepTimings::default();
    }
    r
}

/// `scare-radi <version> (<git describe>)`.
pub fn provenance() -> String {
    format!("scare-radi {} ({})", env!("CARGO_PKG_VERSION"), option_env!("SCARE_RADI_GIT_REV").unwrap_or("unknown"))
}
