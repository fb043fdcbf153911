use std::fmt;
use std::io::ErrorKind;

/// Validation, I/O and malformed-input failures.
pub const EXIT_INVALID: i32 = 2;
/// The solver produced a non-finite or runaway iterate.
pub const EXIT_DIVERGED: i32 = 3;

/// A failed command: process exit status, a stable kebab-case reason for
/// scripts, and a human-readable detail.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub reason: &'static str,
    pub detail: String,
}

impl CliError {
    pub fn invalid(reason: &'static str, detail: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            reason,
            detail: detail.into(),
        }
    }

    /// Error raised while reading an input file.
    pub fn reading(err: hybridtv::Error) -> Self {
        match &err {
            hybridtv::Error::Io { source, .. } if source.kind() == ErrorKind::NotFound => {
                Self::invalid("input-not-found", err.to_string())
            }
            _ => err.into(),
        }
    }

    /// Error raised while writing an output file.
    pub fn writing(err: hybridtv::Error) -> Self {
        match err {
            hybridtv::Error::Io { .. } => Self::invalid("output-not-writable", err.to_string()),
            other => other.into(),
        }
    }

    /// The single line printed on stderr: `error: <reason>: <detail>`.
    pub fn line(&self) -> String {
        format!("error: {}: {}", self.reason, self.detail.replace('\n', " "))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.reason, self.detail)
    }
}

impl std::error::Error for CliError {}

impl From<hybridtv::Error> for CliError {
    fn from(err: hybridtv::Error) -> Self {
        use hybridtv::Error as E;
        let reason = match &err {
            E::Format { .. } => "invalid-format",
            E::Io { .. } => "io-error",
            E::Argument(_) => "invalid-argument",
            E::NonFiniteSpectrum { .. } => "invalid-psf",
            E::Divergence { .. } => {
                return Self {
                    code: EXIT_DIVERGED,
                    reason: "divergence",
                    detail: err.to_string(),
                }
            }
        };
        Self::invalid(reason, err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Self::invalid("io-error", err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        Self::invalid("invalid-manifest", err.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        Self::invalid("output-not-writable", err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
