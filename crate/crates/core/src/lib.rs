//! Random-subspace learning with sliced mutual-information generalization bounds.
//!
//! Models are trained with their weights restricted to (or penalized toward) a
//! random `d`-dimensional subspace of the `D`-dimensional parameter space. The
//! crate measures how much information the projected weights carry about the
//! training data and turns that into generalization bounds, including
//! entropy-coded bounds for quantized weights and rate-distortion bounds for
//! softly compressed networks.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod mi;
pub mod models;
pub mod numeric;
pub mod parallel;
pub mod projectors;
pub mod quantize;
pub mod verify;

pub use error::{Error, Result};
pub use numeric::{Matrix, RngStream};
pub use projectors::{Family, Projector, ProjectorSpec};
