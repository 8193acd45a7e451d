//! Belief-based curvature classification and entropy-gated speed control
//! on synthetic cone tracks.

// Range checks are written as `!(x >= lo)` so NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod active;
pub mod beliefs;
pub mod config;
pub mod controller;
mod error;
pub mod eval;
pub mod net;
pub mod pipeline;
pub mod sampling;
pub mod svg;
pub mod track;

pub use error::{Error, Result};
