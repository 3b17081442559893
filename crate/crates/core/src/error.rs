use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The variants follow the failure classes a caller has to distinguish:
/// bad input (domain, dimension, parameters), structural capability, and
/// numerical failure of a solver or parameter search.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input entry at index {0}")]
    NonFinite(usize),

    #[error("point is not on the hyperplane (relative residual {0:e})")]
    Membership(f64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("norm lacks required structure: {0}")]
    Capability(String),

    #[error("smoothness budget exhausted: {0}")]
    SmoothnessBudget(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("parameter selection failed: {0}")]
    ParameterSelection(String),

    #[error("parameterization alarm: {0}")]
    Parameterization(String),

    #[error("solver failure after {iterations} iterations (residual {residual:e}): {message}")]
    Solver { message: String, iterations: usize, residual: f64 },

    #[error("search exceeds desk scale: {0}")]
    Scale(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True for failures of a numerical procedure (as opposed to bad input).
    pub fn is_numerical_failure(&self) -> bool {
        matches!(
            self,
            Error::SmoothnessBudget(_)
                | Error::ParameterSelection(_)
                | Error::Parameterization(_)
                | Error::Solver { .. }
                | Error::Internal(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
