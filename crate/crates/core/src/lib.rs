//! Construction and certification of SDP rounding schemes for predicates of the
//! form sign(a·x₁ + x₂ + … + x_k): a weighted president vote plus k−1 citizen votes.
//!
//! The library computes exact Fourier tables for these predicates, builds
//! low-degree rounding polynomials whose expected value stays positive over the
//! pairing polytope of satisfying assignments, certifies that positivity on
//! vertices and sampled interior points, and solves the bias-only balance systems
//! that show why pairwise moments are necessary.

pub mod certify;
pub mod cli;
pub mod error;
pub mod fourier;
pub mod instance;
pub mod ktw;
pub mod nopairwise;
pub mod numeric;
pub mod predicate;
pub mod rounding;

pub use error::{Error, Result};
