//! The experiment grid: problem cases crossed with shift variants.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use scare_core::engine::{radi_solve_traced, RunReport, SolveOptions};
use scare_core::problem::StandardProblem;
use scare_core::shift::ShiftConfig;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::generate::{gen_heat_problem, with_noise, HeatSpec};
use crate::loader::{load_problem, LoadedProblem};
use crate::report::{provenance, summary_table, trace_csv, SummaryRow};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SCARE_RADI_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemSource {
    /// A Matrix Market problem directory.
    Path(PathBuf),
    /// A generator label such as `heat:n=1357,m=7,l=6`.
    Generate(String),
}

impl ProblemSource {
    pub fn load(&self, seed: u64) -> Result<LoadedProblem> {
        match self {
            ProblemSource::Path(dir) => load_problem(dir),
            ProblemSource::Generate(spec) => {
                let spec: HeatSpec = spec.parse()?;
                Ok(LoadedProblem::Standard(gen_heat_problem(&spec, seed)?))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    /// Number of terms per case: 1 is deterministic, 2 gives one case per
    /// noise scale and larger values combine the first `r - 1` scales.
    #[serde(default = "default_r")]
    pub r: Vec<usize>,
    #[serde(default = "default_noise")]
    pub noise_scales: Vec<f64>,
    /// Shift labels such as `hami 1` or `proj c 5`; empty means all twelve.
    #[serde(default)]
    pub variants: Vec<String>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_trunc")]
    pub trunc_rel: f64,
    #[serde(default)]
    pub cap_cols: Option<usize>,
    #[serde(default)]
    pub xi_cap: Option<usize>,
    #[serde(default)]
    pub stop_on_stall: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_r() -> Vec<usize> {
    vec![1, 2, 5]
}

fn default_noise() -> Vec<f64> {
    vec![1e-5, 1e-4, 1e-3, 1e-2]
}

fn default_tol() -> f64 {
    SolveOptions::default().tol_nres
}

fn default_max_iter() -> usize {
    SolveOptions::default().max_iter
}

fn default_trunc() -> f64 {
    SolveOptions::default().trunc_rel
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSource) -> Self {
        serde_json::from_value(serde_json::json!({ "problem": problem })).expect("defaults deserialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn shift_variants(&self) -> Result<Vec<ShiftConfig>> {
        if self.variants.is_empty() {
            return Ok(ShiftConfig::variants());
        }
        self.variants.iter().map(|v| v.parse().map_err(BenchError::from)).collect()
    }

    pub fn solve_options(&self, shift: ShiftConfig) -> SolveOptions {
        SolveOptions {
            tol_nres: self.tol,
            max_iter: self.max_iter,
            trunc_rel: self.trunc_rel,
            cap_cols: self.cap_cols,
            xi_cap: self.xi_cap,
            shift,
            stop_on_stall: self.stop_on_stall,
            ..SolveOptions::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solve_options(ShiftConfig::default()).validate()?;
        self.shift_variants()?;
        if self.r.is_empty() {
            return Err(BenchError::Config("no values of r".into()));
        }
        self.cases().map(|_| ())
    }

    /// Problem cases in grid order.
    pub fn cases(&self) -> Result<Vec<Case>> {
        let term = |j: usize| (self.noise_scales[j], self.seed + 1 + j as u64);
        let mut out = Vec::new();
        for &r in &self.r {
            match r {
                0 => return Err(BenchError::Config("r must be at least 1".into())),
                1 => out.push(Case { label: "r1".into(), r, terms: vec![] }),
                2 => {
                    if self.noise_scales.is_empty() {
                        return Err(BenchError::Config("r = 2 needs at least one noise scale".into()));
                    }
                    for j in 0..self.noise_scales.len() {
                        out.push(Case { label: format!("r2_ns{:e}", self.noise_scales[j]), r, terms: vec![term(j)] });
                    }
                }
                _ => {
                    if self.noise_scales.len() < r - 1 {
                        return Err(BenchError::Config(format!("r = {r} needs {} noise scales, got {}", r - 1, self.noise_scales.len())));
                    }
                    out.push(Case { label: format!("r{r}"), r, terms: (0..r - 1).map(term).collect() });
                }
            }
        }
        Ok(out)
    }
}

/// One stochastic problem of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub label: String,
    pub r: usize,
    /// `(noise scale, seed)` of every added term.
    pub terms: Vec<(f64, u64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellReport {
    pub case: String,
    pub r: usize,
    pub noise: Vec<f64>,
    pub report: RunReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridReport {
    pub provenance: String,
    pub config: ExperimentConfig,
    pub n: usize,
    pub l: usize,
    pub cells: Vec<CellReport>,
}

impl GridReport {
    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        self.cells.iter().map(|c| SummaryRow::new(format!("{} {}", c.case, c.report.shift), &c.report)).collect()
    }
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&t| t > 0)
}

pub fn run_grid(cfg: &ExperimentConfig) -> Result<GridReport> {
    cfg.validate()?;
    let variants = cfg.shift_variants()?;
    let cases = cfg.cases()?;
    let base = cfg.problem.load(cfg.seed)?;
    let problems: Vec<StandardProblem> =
        cases.iter().map(|c| with_noise(base.clone(), &c.terms)?.into_standard()).collect::<Result<_>>()?;
    let (n, l) = problems.first().map(|p| (p.n(), p.l())).unwrap_or((base.n(), 0));

    let jobs: Vec<(usize, ShiftConfig)> = (0..cases.len()).flat_map(|i| variants.iter().map(move |&v| (i, v))).collect();
    let run = || -> Vec<CellReport> {
        jobs.par_iter()
            .map(|&(i, shift)| {
                let out = radi_solve_traced(&problems[i], &cfg.solve_options(shift));
                let case = &cases[i];
                CellReport { case: case.label.clone(), r: case.r, noise: case.terms.iter().map(|t| t.0).collect(), report: out.report }
            })
            .collect()
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = thread_cap() {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
    let cells = pool.install(run);

    let report = GridReport { provenance: provenance(), config: cfg.clone(), n, l, cells };
    if let Some(dir) = &cfg.output_dir {
        write_grid(dir, &report)?;
    }
    Ok(report)
}

/// File-system friendly form of a shift label: `hami c 1` -> `hami_c_1`.
pub fn slug(label: &str) -> String {
    label.split_whitespace().collect::<Vec<_>>().join("_")
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| BenchError::io(path, e))
}

/// `<dir>/<case>/<shift>.csv` per cell, plus `summary.json` and `summary.txt`.
pub fn write_grid(dir: &Path, report: &GridReport) -> Result<()> {
    for cell in &report.cells {
        let sub = dir.join(&cell.case);
        fs::create_dir_all(&sub).map_err(|e| BenchError::io(&sub, e))?;
        write(&sub.join(format!("{}.csv", slug(&cell.report.shift))), &trace_csv(&cell.report, report.l))?;
    }
    #[derive(Serialize)]
    struct Cell<'a> {
        case: &'a str,
        r: usize,
        noise: &'a [f64],
        shift: &'a str,
        summary: &'a scare_core::engine::RunSummary,
    }
    let cells: Vec<Cell> = report
        .cells
        .iter()
        .map(|c| Cell { case: &c.case, r: c.r, noise: &c.noise, shift: &c.report.shift, summary: &c.report.summary })
        .collect();
    let json = serde_json::json!({
        "provenance": report.provenance,
        "config": report.config,
        "n": report.n,
        "cells": cells,
    });
    write(&dir.join("summary.json"), &serde_json::to_string_pretty(&json)?)?;
    write(&dir.join("summary.txt"), &summary_table(&report.summary_rows()))
}
