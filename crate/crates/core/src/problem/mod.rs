//! Problem containers, the standard-form transforms and dense residuals.

pub mod original;
pub mod residual;
pub mod standard;

pub use original::OriginalProblem;
pub use residual::{
    feedback_dense, feedback_original_dense, incorporation_residual_dense, residual_dense, residual_original_dense,
    DenseProblem, DenseSolution,
};
pub use standard::{adapt_in_place, standardize, StandardProblem, DENSE_LIMIT};
