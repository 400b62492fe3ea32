use super::{log2_inv, KeyResult};
use crate::error::{Error, Result};
use crate::numerics::{binary_entropy, PrecisionConfig};
use crate::sampling::{ekert_threshold, slope_check, threshold, EkertDirection, SamplingBoundKind};
use libm::sqrt;

/// Inputs of the ideal BBM92 evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BBM92Inputs {
    /// Raw block size N.
    pub big_n: u64,
    /// Test sample size n.
    pub n: u64,
    /// Tolerated QBER p_th.
    pub p_th: f64,
    pub lambda_ec_factor: f64,
    pub eps_pe: f64,
    pub eps_cor: f64,
    pub eps_pa: f64,
    pub bound_kind: SamplingBoundKind,
    pub ekert_direction: EkertDirection,
    pub precision: PrecisionConfig,
}

impl BBM92Inputs {
    /// Reference settings: p_th = 4.55%, factor 1.19, ε_cor = ε_PA = 1e-8,
    /// ε_PE = 4e-16.
    pub fn reference(big_n: u64, n: u64, bound_kind: SamplingBoundKind) -> Self {
        BBM92Inputs {
            big_n,
            n,
            p_th: 0.0455,
            lambda_ec_factor: 1.19,
            eps_pe: 4e-16,
            eps_cor: 1e-8,
            eps_pa: 1e-8,
            bound_kind,
            ekert_direction: EkertDirection::default(),
            precision: PrecisionConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n > 0 && self.n < self.big_n) {
            return Err(Error::config("n", "need 0 < n < N"));
        }
        if !(self.p_th > 0.0 && self.p_th < 0.5) {
            return Err(Error::config("p_th", "must lie in (0, 1/2)"));
        }
        if !(self.lambda_ec_factor >= 0.0) || !self.lambda_ec_factor.is_finite() {
            return Err(Error::config("lambda_ec_factor", "must be a finite nonnegative number"));
        }
        for (name, v) in [
            ("eps_pe", self.eps_pe),
            ("eps_cor", self.eps_cor),
            ("eps_pa", self.eps_pa),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::config(name, "must lie in (0, 1)"));
            }
        }
        self.precision.validate()
    }

    /// 2√ε_PE + ε_PA.
    pub fn eps_sec(&self) -> f64 {
        2.0 * sqrt(self.eps_pe) + self.eps_pa
    }
}

/// l = ⌊(N−n)[1 − h(min(q_th, ½))] − λ_EC − log₂(1/(2ε_cor ε_PA²))⌋, clamped at 0.
pub fn key_length_bbm92(inputs: &BBM92Inputs) -> Result<KeyResult> {
    inputs.validate()?;
    let BBM92Inputs {
        big_n, n, p_th, eps_pe, ..
    } = *inputs;
    let prec = &inputs.precision;
    let (eps_sec, eps_cor) = (inputs.eps_sec(), inputs.eps_cor);
    let kind = inputs.bound_kind;
    if !slope_check(kind, big_n, n, eps_pe, p_th, prec) {
        return Err(Error::SlopeCondition {
            family: kind.name(),
            p_th,
        });
    }
    let q = match kind {
        SamplingBoundKind::EkertCombined => match ekert_threshold(big_n, n, eps_pe, p_th, inputs.ekert_direction) {
            Ok(q) => q,
            Err(Error::Infeasible(_)) => return Ok(KeyResult::infeasible(eps_sec, eps_cor, f64::INFINITY)),
            Err(e) => return Err(e),
        },
        _ => threshold(kind, big_n, n, eps_pe, p_th, prec)?,
    };
    if !(q < 0.5) {
        return Ok(KeyResult::infeasible(eps_sec, eps_cor, q));
    }
    let keep = (big_n - n) as f64;
    let lambda_ec = inputs.lambda_ec_factor * keep * binary_entropy(p_th)?;
    let raw = keep * (1.0 - binary_entropy(q.max(0.0))?)
        - lambda_ec
        - log2_inv(2.0 * eps_cor * inputs.eps_pa * inputs.eps_pa);
    Ok(KeyResult::from_raw(raw, big_n as f64, eps_sec, eps_cor, q))
}
