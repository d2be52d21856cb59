use spares_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("{0}")]
    Infeasible(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Other(String),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Infeasible(_) => 4,
            CliError::Io { .. } | CliError::Other(_) => 1,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// Wraps a core error, prefixing validation messages with `block`.
    pub fn from_core(block: &str, err: CoreError) -> Self {
        match err {
            CoreError::InvalidParameter { .. }
            | CoreError::InvalidConfig(_)
            | CoreError::DimensionMismatch { .. }
            | CoreError::NoRelativeDrift => CliError::Validation(format!("{block}: {err}")),
            CoreError::StationaryNotConverged { .. }
            | CoreError::FixedPointNotConverged { .. }
            | CoreError::Singular(_) => CliError::NonConvergence(err.to_string()),
            CoreError::NoFeasibleDesign { .. } => CliError::Infeasible(err.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        CliError::Other(format!("csv: {err}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Other(format!("json: {err}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
