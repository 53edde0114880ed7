use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use scare_bench::grid::{run_grid, ExperimentConfig, ProblemSource};
use scare_bench::report::{provenance, summary_table, trace_csv, SummaryRow};
use scare_bench::validate::criteria;
use scare_bench::with_noise;
use scare_core::engine::{radi_solve_traced, SolveOptions};
use scare_core::shift::{ShiftConfig, ShiftMode, ShiftStrategy};

#[derive(Parser)]
#[command(name = "scare-radi", version, about = "Low-rank solver for large sparse stochastic Riccati equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and write its trace.
    Solve(SolveArgs),
    /// Run an experiment grid described by a JSON file.
    Grid {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the validation criteria.
    Validate {
        /// Also run the desk-scale and grid criteria (8 to 10).
        #[arg(long)]
        all: bool,
        /// Run only these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Hami,
    Proj,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Cached,
    PerIter,
}

#[derive(clap::Args)]
struct SolveArgs {
    /// Matrix Market problem directory.
    #[arg(long, required_unless_present = "generate", conflicts_with = "generate")]
    problem: Option<PathBuf>,
    /// Synthetic problem, e.g. `heat:n=1357,m=7,l=6`.
    #[arg(long)]
    generate: Option<String>,
    /// Number of terms; noise scales are added to reach it.
    #[arg(long, default_value_t = 1)]
    r: usize,
    /// Comma-separated noise scales, one per extra term.
    #[arg(long, value_delimiter = ',')]
    noise: Vec<f64>,
    #[arg(long, value_enum, default_value = "hami")]
    shift: Strategy,
    #[arg(long, default_value_t = 1)]
    window: usize,
    #[arg(long, value_enum, default_value = "cached")]
    mode: Mode,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 300)]
    max_iter: usize,
    #[arg(long, default_value_t = 3.33e-15)]
    trunc_rel: f64,
    /// Row cap of the residual factor; defaults to 10 r l.
    #[arg(long)]
    cap_cols: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for trace.csv and summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn solve(args: SolveArgs) -> anyhow::Result<bool> {
    let source = match (&args.problem, &args.generate) {
        (Some(dir), _) => ProblemSource::Path(dir.clone()),
        (None, Some(spec)) => ProblemSource::Generate(spec.clone()),
        (None, None) => bail!("either --problem or --generate is required"),
    };
    let base = source.load(args.seed)?;
    let extra = args.r.checked_sub(base.r()).context("--r is smaller than the problem's own r")?;
    if args.noise.len() < extra {
        bail!("--r {} needs {extra} noise scales, got {}", args.r, args.noise.len());
    }
    let terms: Vec<(f64, u64)> = args.noise[..extra].iter().enumerate().map(|(j, &ns)| (ns, args.seed + 1 + j as u64)).collect();
    let p = with_noise(base, &terms)?.into_standard()?;

    let strategy = match args.shift {
        Strategy::Hami => ShiftStrategy::Hamiltonian,
        Strategy::Proj => ShiftStrategy::Projection,
    };
    let mode = match args.mode {
        Mode::Cached => ShiftMode::Cached,
        Mode::PerIter => ShiftMode::PerIteration,
    };
    let opts = SolveOptions {
        tol_nres: args.tol,
        max_iter: args.max_iter,
        trunc_rel: args.trunc_rel,
        cap_cols: args.cap_cols,
        shift: ShiftConfig::new(strategy, args.window, mode),
        ..SolveOptions::default()
    };
    let out = radi_solve_traced(&p, &opts);
    let report = &out.report;
    print!("{}", summary_table(&[SummaryRow::new(report.shift.clone(), report)]));

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("trace.csv"), trace_csv(report, p.l()))?;
        let json = serde_json::json!({
            "provenance": provenance(),
            "problem": source,
            "n": p.n(),
            "m": p.m(),
            "l": p.l(),
            "r": p.r(),
            "noise": terms.iter().map(|t| t.0).collect::<Vec<_>>(),
            "seed": args.seed,
            "options": opts,
            "summary": report.summary,
        });
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&json)?)?;
    }
    if let Some(e) = out.error {
        eprintln!("error: {e}");
    }
    Ok(report.summary.converged)
}

fn grid(config: PathBuf) -> anyhow::Result<bool> {
    let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
    let cfg = ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", config.display()))?;
    let report = run_grid(&cfg)?;
    print!("{}", summary_table(&report.summary_rows()));
    Ok(report.cells.iter().all(|c| c.report.summary.error.is_none()))
}

fn validate(all: bool, only: Vec<usize>) -> bool {
    let mut ok = true;
    for c in criteria() {
        let selected = if only.is_empty() { all || c.id <= 7 } else { only.contains(&c.id) };
        if selected {
            let outcome = c.run();
            println!("{outcome}");
            ok &= outcome.passed;
        }
    }
    ok
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Grid { config } => grid(config),
        Command::Validate { all, only } => Ok(validate(all, only)),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
