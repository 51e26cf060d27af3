//! Explicit ReLU networks that interpolate lattice samples of a function on
//! `[0, 1]^d` along the reflected Kuhn triangulation.
//!
//! The interpolant inherits the modulus of regularity of the samples, so a
//! built network is never steeper than the data. Alongside the main builder
//! the crate has max, median and memorizer gadgets, a step-function baseline
//! for comparison, and the measurement oracles used to verify all of them.

// `!(a < b)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baseline;
pub mod builder;
pub mod error;
pub mod gadgets;
pub mod grid;
pub mod kuhn;
pub mod modulus;
pub mod net;
pub mod targets;

mod compose;

pub use error::{Error, Result};
pub use grid::SampleGrid;
pub use modulus::Modulus;
pub use net::{Layer, ReluNet};
