//! Finite-statistics toolbox for quantum key distribution.
//!
//! Confidence bounds for Bernoulli sampling and for sampling without
//! replacement, the threshold functions they induce for the random-sampling
//! problem of parameter estimation, and finite-key evaluators for the ideal
//! BBM92 protocol and decoy-state BB84.
//!
//! The crate is `no_std` (with `alloc`); IO, configuration files and the
//! command line live in the `qkdstat` companion crate.

#![no_std]
#![forbid(unsafe_code)]
// NaN must fail range checks, hence the negated comparisons.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::needless_range_loop
)]

extern crate alloc;

pub mod bernoulli;
pub mod error;
pub mod numerics;
pub mod optimizer;
pub mod protocols;
pub mod sampling;

pub use error::{Error, Result};
pub use numerics::{LogProb, PrecisionConfig};

/// Which side of a one-sided confidence interval is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Direction {
    Lower,
    Upper,
}
