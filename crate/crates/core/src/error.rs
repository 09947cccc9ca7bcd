use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the analysis chain.
///
/// Variants are grouped so that front-ends can map them onto the three failure
/// classes they care about: bad input, solver trouble, and filesystem trouble.
#[derive(Debug, Error)]
pub enum Error {
    #[error("expected {expected} rows, got {got}")]
    RowCount { expected: usize, got: usize },

    #[error("non-monotone hour index at row {row}: expected {expected}, found {found}")]
    HourIndex {
        row: usize,
        expected: usize,
        found: String,
    },

    #[error("negative sample at hour {hour}")]
    NegativeSample { hour: usize },

    #[error("capacity factor above 1 at hour {hour}")]
    CapacityFactorAboveOne { hour: usize },

    #[error("unparseable number {text:?} at line {line}")]
    Unparseable { line: usize, text: String },

    #[error("unit mismatch: expected {expected}, found {found}")]
    UnitMismatch { expected: String, found: String },

    #[error("horizon mismatch: {what} has {got} samples, expected {expected}")]
    HorizonMismatch {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("carbon at zero-load hour {hour}")]
    CarbonAtZeroLoad { hour: usize },

    #[error("undefined utilization: no hours with positive load")]
    UndefinedUtilization,

    #[error("{0}")]
    Invalid(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Solver,
    Io,
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Solver(_) => ErrorClass::Solver,
            Error::Io { .. } => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
