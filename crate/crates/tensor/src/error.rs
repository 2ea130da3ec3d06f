use thiserror::Error;

/// Errors produced by tensor construction, operations, and the LMT1 format.
#[derive(Debug, Error)]
pub enum TensorError {
    #[error("{op}: dimension mismatch, lhs shape {lhs:?} vs rhs shape {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("{op}: invalid shape {shape:?}: {reason}")]
    InvalidShape {
        op: &'static str,
        shape: Vec<usize>,
        reason: String,
    },

    #[error("{op}: non-finite value encountered")]
    NonFinite { op: &'static str },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad tensor format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, TensorError>;
