//! Dense f64 tensors with recorded-graph reverse-mode autodiff.
//!
//! The whole workspace computes on one type: [`Tensor`], a row-major `f64`
//! buffer plus shape. Operations record their inputs while recording is
//! enabled (see [`no_grad`]); [`Tensor::backward`] walks the recorded graph
//! once, leaves through intermediates, and deposits `d loss / d tensor` on
//! every parameter that asked for it. [`gradcheck::finite_diff_check`]
//! verifies the whole arrangement numerically, and [`format`] holds LMT1,
//! the bit-exact on-disk encoding used by checkpoints.

mod error;
mod gradcheck;
mod ops;
mod tensor;

pub mod format;

pub use error::{Result, TensorError};
pub use gradcheck::finite_diff_check;
pub use ops::{no_grad, MASK_SENTINEL};
pub use tensor::Tensor;
