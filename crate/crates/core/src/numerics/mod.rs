//! Special functions and tail evaluation.
//!
//! Everything here works in double precision. Probabilities that are compared
//! against tiny error budgets are carried in the log domain, and every such
//! comparison inflates the computed tail by [`PrecisionConfig::tail_safety`]
//! so rounding can only make a confidence bound more conservative.

mod beta;
mod gamma;
mod hypergeom;
mod lambert;

pub use beta::{ln_reg_inc_beta, reg_inc_beta, reg_inc_beta_inv};
pub use gamma::{ln_dbinom, ln_gamma, log_binomial, stirlerr};
pub use hypergeom::{hg_log_cmf, hg_log_pmf};
pub use lambert::{lambert_w, lambert_w_neg_exp_plus_one, Branch};

use crate::error::{Error, Result};
use libm::{log, log1p};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PrecisionConfig {
    /// Relative tolerance for iterative solvers.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Factor (≥ 1) applied to computed tail probabilities before they are
    /// compared with an error budget.
    pub tail_safety: f64,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        PrecisionConfig {
            rel_tol: 1e-12,
            max_iter: 100_000,
            tail_safety: 1.0 + 1e-9,
        }
    }
}

impl PrecisionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-6) {
            return Err(Error::config("rel_tol", "must lie in (0, 1e-6]"));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter", "must be positive"));
        }
        if !(self.tail_safety >= 1.0) || !self.tail_safety.is_finite() {
            return Err(Error::config("tail_safety", "must be a finite number >= 1"));
        }
        Ok(())
    }

    /// `true` when a tail probability `exp(log_tail)` is certified to be at
    /// most `eps` after safety inflation.
    pub fn tail_within(&self, log_tail: LogProb, eps: f64) -> bool {
        log_tail.value() + log(self.tail_safety) <= log(eps)
    }
}

/// Natural logarithm of a probability. `-inf` encodes probability zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogProb(f64);

impl LogProb {
    pub const ZERO_PROB: LogProb = LogProb(f64::NEG_INFINITY);
    pub const ONE: LogProb = LogProb(0.0);

    /// Wraps a log-probability, absorbing positive rounding noise into 0.
    pub fn new(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        LogProb(value.min(0.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> f64 {
        libm::exp(self.0)
    }
}

/// Binary entropy in bits, with h(0) = h(1) = 0.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain("binary_entropy", "argument outside [0, 1]"));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    let nats = -x * log(x) - (1.0 - x) * log1p(-x);
    Ok(nats / core::f64::consts::LN_2)
}

/// Neumaier-compensated sum of the slice, accumulated in the given order.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for t in terms {
        let u = s + t;
        if s.abs() >= t.abs() {
            c += (s - u) + t;
        } else {
            c += (t - u) + s;
        }
        s = u;
    }
    s + c
}
