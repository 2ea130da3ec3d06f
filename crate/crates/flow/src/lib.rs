//! Classical optical flow and flow-projection frame interpolation.
//!
//! The pipeline expands an N-frame grayscale sequence to 2N−1 frames:
//! estimate adjacent-frame and long-range flow with a pyramidal
//! Horn–Schunck solver, project the long-range motion onto the adjacent
//! step ([`distance_map`]), and splat both neighbors toward the midpoint
//! ([`synthesize_midframe`]). Frames travel as binary PGM on disk.

mod error;
mod frame;
mod hs;
mod interp;

pub use error::{FlowError, Result};
pub use frame::{FlowField, Frame, MIN_SIDE};
pub use hs::{estimate_flow, FlowConfig};
pub use interp::{distance_map, interpolate_sequence, synthesize_midframe, DistanceMap, FLOW_EPS};
