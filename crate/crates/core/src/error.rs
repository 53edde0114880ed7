use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: non-conformable operands {left:?} and {right:?}")]
    Dimension {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    /// Cholesky hit a non-positive pivot; the Gram matrix is numerically indefinite.
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("control weight R must be symmetric positive definite")]
    WeightNotPositiveDefinite,

    #[error("shift {gamma} rejected: {reason}")]
    ShiftRejected { gamma: f64, reason: String },

    #[error("iteration {iteration}: numerical breakdown: {source}")]
    Breakdown {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no progress: {rejected} consecutive shifts rejected at iteration {iteration}")]
    NoProgress { iteration: usize, rejected: usize },

    #[error("shift generation failed: {0}")]
    ShiftFailure(String),

    #[error("basis construction failed: all residual factors are zero")]
    EmptyBasis,

    #[error("degenerate problem: the right-hand side factor is zero")]
    Degenerate,

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("dense path limited to n <= {limit}, got n = {n}")]
    TooLarge { n: usize, limit: usize },

    #[error("reference solver failed: {0}")]
    Oracle(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn dims(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        Error::Dimension { op, left, right }
    }

    /// Errors after which the engine may retry the iteration with another shift.
    pub fn is_shift_recoverable(&self) -> bool {
        matches!(
            self,
            Error::ShiftRejected { .. } | Error::NotPositiveDefinite { .. } | Error::Singular(_)
        )
    }
}
