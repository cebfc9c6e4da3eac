//! Crate-wide error type.

use std::fmt;
use std::io;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// An argument violated a precondition (bad generator parameters,
    /// rate outside (0,1), empty subset, ...).
    InvalidParameter(String),
    /// The operation requires a connected (sub)graph and got one that is not.
    Disconnected { what: String, witness: Option<usize> },
    /// A supposed maximal matching leaves an edge with no matched endpoint.
    DominationViolation { edge: usize },
    /// A hub set failed CDS certification.
    InvalidHub { witness: usize, reason: String },
    /// Vector/matrix sizes do not line up.
    DimensionMismatch { expected: usize, got: usize, what: String },
    /// The greedy solver cannot reduce the residual (e.g. zero matrix,
    /// nonzero right-hand side).
    NoProgress,
    /// The iterative solver's objective increased beyond tolerance.
    StepSize { iteration: usize, increase: f64 },
    /// An alternating path handed to `augment` is structurally invalid.
    InvalidPath(String),
    /// A dynamic event cannot be applied (duplicate insert, missing delete,
    /// deletion that would disconnect the graph).
    BadEvent(String),
    /// A persisted file (edge list, hub block, event log) is malformed.
    Parse { line: usize, message: String },
    Io(io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Disconnected { what, witness } => match witness {
                Some(v) => write!(f, "{what} is not connected (vertex {v} unreachable)"),
                None => write!(f, "{what} is not connected"),
            },
            Error::DominationViolation { edge } => {
                write!(f, "matching is not maximal: edge {edge} has no matched endpoint")
            }
            Error::InvalidHub { witness, reason } => {
                write!(f, "hub set is not a CDS: {reason} (witness vertex {witness})")
            }
            Error::DimensionMismatch { expected, got, what } => {
                write!(f, "dimension mismatch in {what}: expected {expected}, got {got}")
            }
            Error::NoProgress => write!(f, "solver cannot make progress on this system"),
            Error::StepSize { iteration, increase } => write!(
                f,
                "objective increased by {increase:.3e} at iteration {iteration}; step size too large"
            ),
            Error::InvalidPath(msg) => write!(f, "invalid alternating path: {msg}"),
            Error::BadEvent(msg) => write!(f, "bad event: {msg}"),
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Io(e)
    }
}
