use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the sensing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A scenario failed validation; each entry names the offending field.
    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),

    /// A CSI snapshot whose log-magnitudes are all equal carries no signature.
    #[error("degenerate feature for snapshot {snapshot_id}: all CSI magnitudes are equal")]
    DegenerateFeature { snapshot_id: u64 },

    /// One-tap equalization hit a zero channel estimate.
    #[error("equalization singularity: zero channel estimate on pd {pd}, subcarrier {subcarrier}")]
    EqualizationSingularity { pd: usize, subcarrier: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file could be read but its content is malformed.
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag used as the CLI error prefix.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::InvalidScenario(_) => "invalid-scenario",
            Error::DegenerateFeature { .. } => "degenerate-feature",
            Error::EqualizationSingularity { .. } => "equalization-singularity",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
        }
    }

    /// Process exit code: 1 for domain violations, 2 for I/O and parse failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Parse { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
