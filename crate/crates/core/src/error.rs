use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("negative value {value} at row {row}, column {column}")]
    NegativeValue {
        row: usize,
        column: String,
        value: f64,
    },

    #[error("non-finite value at row {row}, column {column}")]
    NonFiniteValue { row: usize, column: String },

    #[error("dataset has no observations")]
    EmptyDataset,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("at least two groups are required, found {0}")]
    SingleGroup(usize),

    #[error("insufficient co-observed variables: {kept} retained, need at least 2")]
    InsufficientVariables { kept: usize },

    #[error("covariance submatrix for the presence pattern of observation {observation} is not positive definite")]
    NotPositiveDefinite { observation: usize },

    #[error("no feasible penalty on the grid ({candidates} candidates); widen bounds")]
    EmptyFeasibleSet {
        candidates: usize,
        /// Criterion value per candidate, `None` where infeasible.
        trace_path: Vec<(f64, Option<f64>)>,
    },

    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{needed} must be smaller than the number of observations {n}; use the permutation test instead")]
    WilksNotApplicable { needed: usize, n: usize },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// Coarse classification used by callers that map errors to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// The input data or configuration is invalid.
    Input,
    /// The computation is numerically infeasible for this input.
    Infeasible,
    /// A contract inside the library was violated.
    Internal,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::NegativeValue { .. }
            | Error::NonFiniteValue { .. }
            | Error::EmptyDataset
            | Error::DimensionMismatch(_)
            | Error::SingleGroup(_)
            | Error::InsufficientVariables { .. }
            | Error::InvalidPenalty(_)
            | Error::InvalidGrid(_)
            | Error::InvalidScenario(_)
            | Error::InvalidConfig(_)
            | Error::WilksNotApplicable { .. } => ErrorCategory::Input,
            Error::NotPositiveDefinite { .. } | Error::EmptyFeasibleSet { .. } => {
                ErrorCategory::Infeasible
            }
            Error::Internal(_) => ErrorCategory::Internal,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
