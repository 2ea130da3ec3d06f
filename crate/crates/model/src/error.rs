//! Error type shared by the diffusion, motion, contrastive, and pipeline code.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("config error: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unknown id: {0}")]
    Lookup(String),

    #[error("numeric abort: {0}")]
    Numeric(String),

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Tensor(#[from] latentmotion_tensor::TensorError),

    #[error(transparent)]
    Flow(#[from] latentmotion_flow::FlowError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;
