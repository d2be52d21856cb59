use thiserror::Error;

/// Errors produced by the analysis, simulation and optimization routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no relative RAAN drift; indirect strategy infeasible")]
    NoRelativeDrift,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix `{0}` is singular")]
    Singular(&'static str),

    #[error(
        "stationary solver did not converge after {iterations} iterations (residual {residual:e})"
    )]
    StationaryNotConverged { iterations: usize, residual: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual trace {trace:?})")]
    FixedPointNotConverged { iterations: usize, trace: Vec<f64> },

    #[error(
        "no feasible design; least infeasible is (r={r}, q={q}) with shortfall {shortfall:.6}"
    )]
    NoFeasibleDesign { r: usize, q: usize, shortfall: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
