//! Epsilon-entropy of orbit-averaged semimetrics on measure-preserving systems.
//!
//! The crate samples invariant measures of a few canonical systems, averages
//! admissible semimetrics along orbits, estimates the epsilon-entropy of the
//! averaged metrics (by coverings and by Kantorovich quantization), checks
//! admissibility empirically, and classifies how the entropies grow with the
//! averaging length.

// `!(x > 0.0)` is how parameter checks reject NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admit;
pub mod dynsys;
pub mod entropy;
pub mod error;
pub mod experiment;
pub mod scaling;
pub mod semimetric;

pub use error::{Error, Result};
