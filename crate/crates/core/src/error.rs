use std::path::PathBuf;

use thiserror::Error;

use crate::solver::SolverReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed image or kernel file; `field` names the offending header field or section.
    #[error("format error in {field}: {message}")]
    Format { field: &'static str, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("non-finite transfer function value at frequency ({row}, {col})")]
    NonFiniteSpectrum { row: usize, col: usize },

    /// The solver produced a non-finite value or a runaway objective.
    /// Carries the report accumulated up to the last finite iterate.
    #[error("solver diverged at iteration {iteration}: {reason}")]
    Divergence {
        iteration: usize,
        reason: String,
        report: Box<SolverReport>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(field: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            field,
            message: message.into(),
        }
    }

    pub(crate) fn arg(message: impl Into<String>) -> Self {
        Error::Argument(message.into())
    }
}
