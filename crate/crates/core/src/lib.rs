//! Low-rank RADI-type solver for large sparse stochastic algebraic Riccati
//! equations.

pub mod alg1;
pub mod dense;
pub mod engine;
pub mod error;
pub mod kernels;
pub mod oracle;
pub mod problem;
pub mod shift;
pub mod sparse;
pub mod testgen;

pub use error::{Error, Result};
pub use sparse::SparseMat;
