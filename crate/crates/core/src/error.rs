//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector must be non-empty")]
    EmptyVector,

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The supplied (ε-)subgradient fails the membership test.
    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A Polyak numerator `F(x) - s - eps` was not positive.
    #[error("estimate violation: F(x) - s - eps = {numerator:e} is not positive")]
    EstimateViolation { numerator: f64 },

    /// `u + w = 0`: the current point is stationary for the chosen subgradients.
    #[error("zero Polyak denominator (stationary point)")]
    Stationary,

    #[error("runtime invariant violated: {0}")]
    InvariantViolation(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// Configuration errors, one entry per offending field.
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
