use alloc::string::String;
use core::fmt;

/// Errors reported by solvers, oracles and problem constructors.
///
/// Dimension mismatches inside tight vector arithmetic panic instead (they
/// are programming errors, like slice index violations); `Error` covers
/// conditions a caller can trigger with bad run parameters or data.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A constructor or solver was given inconsistent dimensions.
    DimensionMismatch { expected: usize, got: usize, what: &'static str },
    /// A parameter is outside its documented domain (non-positive `L`,
    /// negative tolerance, empty grid, ...). The payload names the field.
    InvalidParameter { field: &'static str, message: String },
    /// A required piece of problem knowledge is missing (e.g. a restart
    /// certificate needs either a strong-convexity lower bound or a known
    /// optimal value).
    MissingKnowledge { what: &'static str },
    /// An explicit time-stepping scheme produced a non-finite state; the
    /// payload is the first offending step. Usually means the step size is
    /// too large for the dynamics.
    NonFiniteState { step: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got, what } => {
                write!(f, "dimension mismatch for {what}: expected {expected}, got {got}")
            }
            Error::InvalidParameter { field, message } => {
                write!(f, "invalid parameter `{field}`: {message}")
            }
            Error::MissingKnowledge { what } => write!(f, "missing problem knowledge: {what}"),
            Error::NonFiniteState { step } => {
                write!(f, "simulation blew up to a non-finite state at step {step}")
            }
        }
    }
}

impl core::error::Error for Error {}

impl Error {
    pub(crate) fn bad_param(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter { field, message: message.into() }
    }
}
