use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report.
///
/// Each variant maps to a stable numeric [`Error::code`] so callers outside
/// Rust (the CLI, the Python bindings) can tell failures apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("degenerate cluster: {0}")]
    DegenerateCluster(String),

    #[error("logic error: {0}")]
    Logic(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("bad magic bytes: expected {expected:?}")]
    BadMagic { expected: &'static str },

    #[error("unsupported version {found} (this build reads version {supported})")]
    VersionMismatch { found: u16, supported: u16 },

    #[error("truncated stream: {0}")]
    Truncated(String),

    #[error("coverage violation: {0}")]
    CoverageViolation(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub fn code(&self) -> u32 {
        match self {
            Error::InvalidInput(_) => 10,
            Error::DimensionMismatch { .. } => 11,
            Error::DegenerateCluster(_) => 12,
            Error::Logic(_) => 13,
            Error::UndefinedMetric(_) => 14,
            Error::BadMagic { .. } => 20,
            Error::VersionMismatch { .. } => 21,
            Error::Truncated(_) => 22,
            Error::CoverageViolation(_) => 23,
            Error::UnsupportedFormat(_) => 24,
            Error::Config(_) => 30,
            Error::Io(_) => 40,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn dims(expected: (usize, usize), actual: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            expected: format!("{}x{}", expected.0, expected.1),
            actual: format!("{}x{}", actual.0, actual.1),
        }
    }
}
