//! Inference engine and crossing-guidance pipeline for pedestrian traffic
//! lights and zebra crossings.
//!
//! The crate is organized around five pieces:
//!
//! - [`tensor`]: dense `f32` tensors and the neural operators (convolutions,
//!   pooling, activations, affine maps) needed to execute the network, each
//!   with a naive reference implementation usable as an oracle.
//! - [`model`]: the LytNetV2 graph (bottleneck blocks, squeeze-excite, dual
//!   classification/regression heads), the `.lyt2` weight file format, and a
//!   parameter / multiply-accumulate cost model.
//! - [`metrics`]: the combined classification+regression loss, midline angle
//!   and endpoint error metrics, and per-class precision/recall/F1 reports.
//! - [`guidance`]: ground-plane projection and the positioning / orientation /
//!   light-announcement state machine that turns per-frame network outputs
//!   into a typed, timestamped event log.
//! - [`data`]: labeled-sample IO (CSV labels, binary PPM images) and
//!   deterministic, seedable crop / flip / color-jitter transforms with
//!   coordinate bookkeeping.
//!
//! All of it is deterministic: identical inputs produce identical outputs,
//! byte for byte, which is what makes the replay harness in `lytnet-cli`
//! testable.

pub mod classes;
pub mod data;
pub mod guidance;
pub mod metrics;
pub mod model;
pub mod tensor;

pub use classes::{LightClass, LightMode};
pub use tensor::{Tensor, TensorError};
