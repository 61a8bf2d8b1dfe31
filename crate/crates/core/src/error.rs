use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    /// A file failed validation. `line` is 1-based; 0 means the whole file.
    #[error("{}:{line}: {field}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },

    #[error("{}:{line}: dangling reference to node {node}", path.display())]
    DanglingReference {
        path: PathBuf,
        line: usize,
        node: String,
    },

    #[error("degenerate column '{0}': zero standard deviation")]
    DegenerateColumn(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("model did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NotConverged {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("invalid action {action}: {reason}")]
    InvalidAction { action: usize, reason: String },

    #[error("configuration error: {}", keys.join(", "))]
    Config { keys: Vec<String> },

    #[error("environment error at step {step}: {source}")]
    Rollout {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(
        path: impl Into<PathBuf>,
        line: usize,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failure at run time.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::OutOfRange(_)
                | Error::Parse { .. }
                | Error::DanglingReference { .. }
                | Error::DegenerateColumn(_)
                | Error::InsufficientData(_)
                | Error::InvalidAction { .. }
                | Error::Config { .. }
        )
    }
}
