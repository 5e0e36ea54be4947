//! Spectral toolkit for the fractional parabolic Lame operator.
//!
//! The crate computes Fourier multipliers of `(d/dt - L)^s` for the Lame
//! system `L = mu Delta + (mu + lambda) grad div`, evaluates the Macdonald
//! functions that drive its degenerate extension problem, and verifies the
//! algebraic reduction used to absorb drift terms. Every quantity is
//! computed along at least two independent routes; the `examples/` directory
//! walks through each capability.

pub mod error;
pub mod extension;
pub mod fitting;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod macdonald;
pub mod quad;
pub mod reduction;
pub mod symbol;

pub use error::{Error, Result};
