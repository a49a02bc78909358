//! Error type shared across the crate.

use std::fmt;
use std::io;

use crate::geometry::Ball;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// Two vectors that must live in the same space have different lengths.
    DimensionMismatch { expected: usize, got: usize },
    /// A NaN or infinity reached a numeric kernel.
    NonFinite { context: String },
    /// An operation that needs at least one element got none.
    EmptyInput { context: &'static str },
    /// A configuration value violates its documented range.
    InvalidConfig(String),
    /// The requested combination of options is not implemented.
    Unsupported(String),
    /// The enclosing-ball solver hit its iteration cap before certifying
    /// the requested tolerance. Carries the best ball found and the
    /// relative gap it could certify.
    SolverFailure {
        best: Ball,
        gap: f64,
        iterations: usize,
    },
    /// Text input (dataset or model file) failed to parse; 1-based line.
    Parse { line: usize, message: String },
    /// Training aborted at a stream position, wrapping the cause.
    TrainAbort { stream_index: usize, cause: Box<Error> },
    Io(io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NonFinite { context } => write!(f, "non-finite value in {context}"),
            Error::EmptyInput { context } => write!(f, "empty input: {context}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Unsupported(msg) => write!(f, "unsupported configuration: {msg}"),
            Error::SolverFailure {
                best,
                gap,
                iterations,
            } => write!(
                f,
                "enclosing-ball solver stopped after {iterations} iterations with \
                 relative gap {gap:.3e} (best radius {})",
                best.radius
            ),
            Error::Parse { line, message } => write!(f, "line {line}: {message}"),
            Error::TrainAbort { stream_index, cause } => {
                write!(f, "training aborted at stream index {stream_index}: {cause}")
            }
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            Error::TrainAbort { cause, .. } => Some(cause.as_ref()),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Io(e)
    }
}
