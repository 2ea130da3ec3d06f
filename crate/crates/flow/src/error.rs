//! Error type for flow estimation, interpolation, and PGM I/O.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("{op}: dimension mismatch, {lhs:?} vs {rhs:?}")]
    ShapeMismatch { op: &'static str, lhs: Vec<usize>, rhs: Vec<usize> },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("bad PGM data: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Tensor(#[from] latentmotion_tensor::TensorError),
}

pub type Result<T> = std::result::Result<T, FlowError>;
