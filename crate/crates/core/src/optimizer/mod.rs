//! Parameter optimization and minimum-block-size search.
//!
//! Objectives are the unfloored key-length expression, with a linear
//! penalty once the phase-error threshold passes 1/2, so searches see a
//! continuous landscape instead of the integer plateaus of l.

mod bbm92;
mod decoy;
mod minblock;
mod search;

pub use bbm92::{bbm92_score, optimize_bbm92};
pub use decoy::{decoy_score, optimize_decoy, DecoyParams, SearchSpace};
pub use minblock::{min_block_bbm92, min_block_decoy, min_block_size, MinBlockOptions, MinBlockReport};
pub use search::{golden_max_int, nelder_mead_max, Executor, Sequential};

use crate::numerics::binary_entropy;

/// Continuous surrogate of the key length: the argument of the floor, with
/// h evaluated at min(φ, ½) and a penalty of (φ − ½)·weight beyond ½.
pub(crate) fn penalized_length(weight: f64, phi: f64, lambda_ec: f64, tag: f64) -> f64 {
    if phi.is_nan() {
        return f64::NEG_INFINITY;
    }
    if !phi.is_finite() {
        return -1e300;
    }
    let h = binary_entropy(phi.clamp(0.0, 0.5)).unwrap_or(1.0);
    weight * (1.0 - h) - lambda_ec - tag - (phi - 0.5).max(0.0) * weight
}
