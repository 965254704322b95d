use thiserror::Error;

/// Errors raised by the learning pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("rank deficient: {null_directions} null direction(s) in the second-moment matrix; pass a positive ridge")]
    RankDeficient { null_directions: usize },

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error(
        "objective diverged at iteration {iteration} ({objective:.3e} > 1e3 x initial {initial:.3e}); try a smaller step size"
    )]
    Divergence {
        iteration: usize,
        objective: f64,
        initial: f64,
    },

    #[error("kernel matrix is ill-conditioned (condition number {condition:.3e}); increase lambda2")]
    IllConditioned { condition: f64 },

    #[error("problem too large for this solver: {0}")]
    SizeLimit(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::Divergence { .. }
                | Error::IllConditioned { .. }
                | Error::DivisionByZero(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
