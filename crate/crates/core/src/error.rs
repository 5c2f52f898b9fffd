use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("NaN encountered at iteration {iteration}")]
    NotANumber { iteration: usize },

    #[error("zero pivot at row {row}")]
    ZeroPivot { row: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("collision solve failed in cell {cell}: {source}")]
    CellSolve {
        cell: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    /// Short machine-readable category, printed by the CLI on failure.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) | Error::Parse { .. } => "config",
            Error::InvalidOperator(_) => "operator",
            Error::InvalidInput(_) => "input",
            Error::NotConverged { .. }
            | Error::NotANumber { .. }
            | Error::ZeroPivot { .. }
            | Error::Singular(_)
            | Error::CellSolve { .. } => "solver",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
