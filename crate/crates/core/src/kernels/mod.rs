//! Block linear-algebra kernels used by the engine.

pub mod chol;
pub mod shifted;
pub mod stacked;
pub mod stp;
pub mod trunc;

pub use chol::chol_spd;
pub use shifted::{smw_row_solve, smw_solve, ShiftedFactorization, ShiftedPencil, SmwSolution, SPARSE_BACKEND};
pub use stacked::{ltimes, stacked_gram, Block, RowOrder, StackedMat};
pub use stp::{ltimes_identities_check, semi_tensor, IdentityDeviation};
pub use trunc::{trunc_svd, SvdRoute, TruncationResult};
