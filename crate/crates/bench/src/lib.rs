//! Benchmark driver for the low-rank stochastic Riccati solver: problem
//! ingestion, synthetic generators, the shift-variant grid and reports.

pub mod error;
pub mod generate;
pub mod grid;
pub mod loader;
pub mod mmio;
pub mod report;
pub mod validate;

pub use error::{BenchError, Result};
pub use generate::{gen_heat_problem, gen_noise_blocks, with_noise, HeatSpec};
pub use grid::{run_grid, CellReport, ExperimentConfig, GridReport, ProblemSource};
pub use loader::{load_problem, save_problem, LoadedProblem};
