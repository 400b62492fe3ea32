//! Finite-key evaluators for the ideal BBM92 protocol and for decoy-state
//! BB84, together with the channel model used to set PE thresholds.

mod bbm92;
mod channel;
mod decoy;

pub use bbm92::{key_length_bbm92, BBM92Inputs};
pub use channel::{channel_expectations, expected_key_qber, ChannelModel, ObservedCounts};
pub use decoy::{
    decoy_single_photon_bounds, eps_multiplier, evaluate_decoy, key_length_decoy, pe_thresholds, phase_error_upper,
    DecoyBounds, DecoyInputs, EkertForm, Intensities, PEForm, PEThresholds,
};

use libm::log2;

/// Outcome of a key-length evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KeyResult {
    /// Secret key length in bits (clamped at 0).
    pub l: u64,
    /// l / N.
    pub rate: f64,
    pub eps_sec: f64,
    pub eps_cor: f64,
    /// The phase-error threshold entering h(·), before clamping at 1/2.
    pub q_or_phi_threshold: f64,
    /// `false` when no key can be extracted (PE test failure, threshold at or
    /// above 1/2, infeasible bound, or a nonpositive length).
    pub feasible: bool,
}

impl KeyResult {
    pub(crate) fn infeasible(eps_sec: f64, eps_cor: f64, threshold: f64) -> Self {
        KeyResult {
            l: 0,
            rate: 0.0,
            eps_sec,
            eps_cor,
            q_or_phi_threshold: threshold,
            feasible: false,
        }
    }

    /// Floors `raw` into a key length (the argument of the floor in the key
    /// length formula) and fills in the rate.
    pub(crate) fn from_raw(raw: f64, block: f64, eps_sec: f64, eps_cor: f64, threshold: f64) -> Self {
        let l = if raw.is_finite() && raw >= 1.0 {
            libm::floor(raw) as u64
        } else {
            0
        };
        KeyResult {
            l,
            rate: l as f64 / block,
            eps_sec,
            eps_cor,
            q_or_phi_threshold: threshold,
            feasible: l > 0,
        }
    }
}

/// log₂ of 1/x.
pub(crate) fn log2_inv(x: f64) -> f64 {
    -log2(x)
}
