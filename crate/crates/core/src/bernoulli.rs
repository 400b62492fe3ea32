//! Confidence bounds on the mean of independent Bernoulli trials.
//!
//! Four families are provided: the relaxed additive Chernoff bound Γ±, the
//! multiplicative Chernoff bound, Hoeffding, and the optimal binomial bounds
//! ℱ± built on the exact binomial CMF. [`bernoulli_interval`] dispatches to
//! them in the count-valued form B±(ε, count, total) used by decoy analysis.

use crate::error::{Error, Result};
use crate::numerics::{lambert_w_neg_exp_plus_one, reg_inc_beta, reg_inc_beta_inv, Branch, PrecisionConfig};
use crate::Direction;
use libm::{ceil, fabs, floor, log, log1p, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BernoulliBoundKind {
    RelaxedChernoff,
    MultChernoff,
    Hoeffding,
    ClopperPearsonBinomial,
}

impl BernoulliBoundKind {
    pub const ALL: [BernoulliBoundKind; 4] = [
        BernoulliBoundKind::RelaxedChernoff,
        BernoulliBoundKind::MultChernoff,
        BernoulliBoundKind::Hoeffding,
        BernoulliBoundKind::ClopperPearsonBinomial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BernoulliBoundKind::RelaxedChernoff => "relaxed_chernoff",
            BernoulliBoundKind::MultChernoff => "mult_chernoff",
            BernoulliBoundKind::Hoeffding => "hoeffding",
            BernoulliBoundKind::ClopperPearsonBinomial => "cp_binomial",
        }
    }

    /// Inverse of [`name`](Self::name).
    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// `n` trials with `x` successes. Both may be real in expected-value mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliSample {
    pub n: f64,
    pub x: f64,
}

impl BernoulliSample {
    pub fn new(n: f64, x: f64) -> Result<Self> {
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::domain("BernoulliSample", "trial count must be positive"));
        }
        if !(0.0..=n).contains(&x) {
            return Err(Error::domain("BernoulliSample", "success count outside [0, n]"));
        }
        Ok(BernoulliSample { n, x })
    }

    pub fn p_hat(&self) -> f64 {
        self.x / self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceMode {
    /// Kullback–Leibler divergence D(z‖p).
    Exact,
    /// Rational relaxation 9(z−p)² / (2(z+2p)(3−z−2p)).
    Relaxed,
}

// t ln t − t + 1 at t = 1 + d, with its Taylor series near d = 0. Taking the
// deviation rather than t avoids the cancellation in t − 1.
fn kl_kernel(d: f64) -> f64 {
    if d == -1.0 {
        return 1.0;
    }
    if fabs(d) < 0.1 {
        let mut pow = d * d;
        let mut sum = 0.0;
        let mut k = 2.0;
        let mut sign = 1.0;
        loop {
            let add = sign * pow / (k * (k - 1.0));
            sum += add;
            if fabs(add) <= 1e-17 * sum {
                return sum;
            }
            pow *= d;
            k += 1.0;
            sign = -sign;
        }
    }
    (1.0 + d) * log1p(d) - d
}

pub fn divergence(z: f64, p: f64, mode: DivergenceMode) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) || !(0.0..=1.0).contains(&p) {
        return Err(Error::domain("divergence", "arguments must lie in [0, 1]"));
    }
    match mode {
        DivergenceMode::Relaxed => {
            if z == p {
                return Ok(0.0);
            }
            let d = z - p;
            Ok(9.0 * d * d / (2.0 * (z + 2.0 * p) * (3.0 - z - 2.0 * p)))
        }
        DivergenceMode::Exact => {
            if z == p {
                return Ok(0.0);
            }
            if p == 0.0 || p == 1.0 {
                return Ok(f64::INFINITY);
            }
            let q = 1.0 - p;
            Ok(p * kl_kernel((z - p) / p) + q * kl_kernel((p - z) / q))
        }
    }
}

/// κ, a and the coefficient functions of the relaxed-Chernoff quadratic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxedChernoffTerms {
    pub kappa: f64,
    pub a: f64,
}

impl RelaxedChernoffTerms {
    pub fn new(n: f64, eps: f64) -> Result<Self> {
        if !(n > 0.0) {
            return Err(Error::domain("relaxed_chernoff", "trial count must be positive"));
        }
        if !(eps > 0.0) {
            return Err(Error::domain("relaxed_chernoff", "error probability must be positive"));
        }
        let kappa = 2.0 / (9.0 * n) * log(1.0 / eps);
        Ok(RelaxedChernoffTerms { kappa, a: 1.0 + kappa })
    }

    pub fn b_of_p(&self, p: f64) -> f64 {
        -2.0 * p - self.kappa * (3.0 - 4.0 * p)
    }

    pub fn c_of_p(&self, p: f64) -> f64 {
        p * p - self.kappa * p * (6.0 - 4.0 * p)
    }

    /// Interval of p̂ where γ⁻ is valid.
    pub fn lower_interval(&self) -> (f64, f64) {
        (3.0 * self.kappa / (1.0 + self.kappa), 1.0)
    }

    /// Interval of p̂ where γ⁺ is valid.
    pub fn upper_interval(&self) -> (f64, f64) {
        (0.0, (1.0 - 2.0 * self.kappa) / (1.0 + self.kappa))
    }

    fn gamma(&self, x: f64, sign: f64) -> f64 {
        let k = self.kappa;
        let rad = (k * (k + x - x * x)).max(0.0);
        (3.0 * k + (1.0 - 2.0 * k) * x + sign * 3.0 * sqrt(rad)) / (1.0 + 4.0 * k)
    }

    pub fn gamma_minus(&self, x: f64) -> f64 {
        self.gamma(x, -1.0)
    }

    pub fn gamma_plus(&self, x: f64) -> f64 {
        self.gamma(x, 1.0)
    }

    /// dγ⁺/dx.
    pub fn gamma_plus_slope(&self, x: f64) -> f64 {
        let k = self.kappa;
        let rad = k * (k + x - x * x);
        if rad <= 0.0 {
            return f64::INFINITY;
        }
        ((1.0 - 2.0 * k) + 3.0 * k * (1.0 - 2.0 * x) / (2.0 * sqrt(rad))) / (1.0 + 4.0 * k)
    }
}

/// Larger root z of a z² + b(p) z + c(p) = 0: the deviation with
/// Pr[p̂ ≥ z] ≤ ε under the relaxed divergence.
pub fn forward_z(n: f64, p: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::domain("forward_z", "error probability must lie in (0, 1]"));
    }
    let t = RelaxedChernoffTerms::new(n, eps)?;
    let k = t.kappa;
    let p_max = (1.0 - 2.0 * k) / (1.0 + 4.0 * k);
    if !(0.0..=p_max).contains(&p) {
        return Err(Error::domain("forward_z", "p must lie in [0, (1-2κ)/(1+4κ)]"));
    }
    let (a, b, c) = (t.a, t.b_of_p(p), t.c_of_p(p));
    let disc = (b * b - 4.0 * a * c).max(0.0);
    Ok((-b + sqrt(disc)) / (2.0 * a))
}

/// Γ⁻ or Γ⁺ of the relaxed Chernoff bound. Outside the validity interval
/// the sentinels −ε (lower) and 1+ε (upper) are returned; `clamp` maps the
/// result into [0, 1] instead.
pub fn gamma_bound(direction: Direction, sample: BernoulliSample, eps: f64, clamp: bool) -> Result<f64> {
    let t = RelaxedChernoffTerms::new(sample.n, eps)?;
    let x = sample.p_hat();
    let v = match direction {
        Direction::Lower => {
            let (lo, hi) = t.lower_interval();
            if x >= lo && x <= hi {
                t.gamma_minus(x)
            } else {
                -eps
            }
        }
        Direction::Upper => {
            let (lo, hi) = t.upper_interval();
            if x >= lo && x <= hi {
                t.gamma_plus(x)
            } else {
                1.0 + eps
            }
        }
    };
    Ok(if clamp { v.clamp(0.0, 1.0) } else { v })
}

/// c_{x,y} and the multiplicative-Chernoff deviations for count `x`.
///
/// `delta_plus` is the deviation that makes x + δ⁺ an upper confidence bound;
/// it is built from the lower Lambert branch and tends to ln(1/ε) as x → 0.
/// `delta_minus` uses the principal branch and vanishes at x = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultChernoffTerms {
    pub c_xy: f64,
    pub delta_plus: f64,
    pub delta_minus: f64,
}

impl MultChernoffTerms {
    pub fn new(x: f64, eps: f64, prec: &PrecisionConfig) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::domain("mult_chernoff", "error probability must lie in (0, 1)"));
        }
        if !(x >= 0.0) {
            return Err(Error::domain("mult_chernoff", "count must be nonnegative"));
        }
        let ln_inv = log(1.0 / eps);
        if x == 0.0 {
            return Ok(MultChernoffTerms {
                c_xy: f64::INFINITY,
                delta_plus: ln_inv,
                delta_minus: 0.0,
            });
        }
        let u = ln_inv / x;
        // W(−e^{−c}) + 1 with c = 1 + u, evaluated without cancellation.
        let w_lower_p1 = lambert_w_neg_exp_plus_one(Branch::Lower, u, prec)?;
        let w_princ_p1 = lambert_w_neg_exp_plus_one(Branch::Principal, u, prec)?;
        Ok(MultChernoffTerms {
            c_xy: 1.0 + u,
            delta_plus: -x * w_lower_p1,
            delta_minus: x * w_princ_p1,
        })
    }
}

/// ε* = I_{(k−1)/n}(k, n−k+1) and the shift Δ of the binomial bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaBoundTerms {
    pub eps_star: f64,
    pub delta_shift: f64,
}

pub const CP_DELTA_SHIFT: f64 = 1e-12;

impl BetaBoundTerms {
    pub fn new(n: u64, k: u64, prec: &PrecisionConfig) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::domain("cp_binomial", "ε* needs 1 <= k <= n"));
        }
        let (nf, kf) = (n as f64, k as f64);
        let eps_star = reg_inc_beta((kf - 1.0) / nf, kf, nf - kf + 1.0, false, prec)?;
        Ok(BetaBoundTerms {
            eps_star,
            delta_shift: CP_DELTA_SHIFT,
        })
    }
}

fn cp_lower_count(n: u64, k: u64, eps: f64, prec: &PrecisionConfig) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    let terms = BetaBoundTerms::new(n, k, prec)?;
    let (nf, kf) = (n as f64, k as f64);
    if eps >= terms.eps_star {
        if terms.eps_star >= 1.0 {
            return Err(Error::domain("cp_binomial", "ε* = 1 makes the linear branch undefined"));
        }
        return Ok(kf / nf - (1.0 - eps) / (nf * (1.0 - terms.eps_star)));
    }
    reg_inc_beta_inv(eps, kf, nf - kf + 1.0, prec)
}

/// Optimal one-sided binomial bounds ℱ⁻ / ℱ⁺ for an integer sample.
pub fn cp_binomial(direction: Direction, sample: BernoulliSample, eps: f64, prec: &PrecisionConfig) -> Result<f64> {
    if !(eps > 0.0 && eps <= 0.25) {
        return Err(Error::domain("cp_binomial", "error probability must lie in (0, 1/4]"));
    }
    let (n, k) = integer_sample(sample)?;
    match direction {
        Direction::Lower => cp_lower_count(n, k, eps, prec),
        Direction::Upper => Ok(1.0 - cp_lower_count(n, n - k, eps, prec)?),
    }
}

fn integer_sample(sample: BernoulliSample) -> Result<(u64, u64)> {
    let (n, x) = (sample.n, sample.x);
    if n != floor(n) || x != floor(x) {
        return Err(Error::domain(
            "cp_binomial",
            "requires integer trial and success counts",
        ));
    }
    Ok((n as u64, x as u64))
}

/// Count-valued bound B±(ε, count, total) of the selected family.
///
/// Relaxed-Chernoff sentinels are propagated (−ε·total, (1+ε)·total) and
/// Hoeffding is left unclamped. For the binomial family, non-integer inputs
/// are rounded conservatively: the total to the nearest integer, the count
/// down for a lower bound and up for an upper bound.
pub fn bernoulli_interval(
    kind: BernoulliBoundKind,
    direction: Direction,
    eps: f64,
    count: f64,
    total: f64,
    prec: &PrecisionConfig,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) && !(kind == BernoulliBoundKind::Hoeffding && eps == 1.0) {
        return Err(Error::domain(kind.name(), "error probability must lie in (0, 1)"));
    }
    if !(total > 0.0) || !(0.0..=total).contains(&count) {
        return Err(Error::domain(kind.name(), "need 0 <= count <= total and total > 0"));
    }
    match kind {
        BernoulliBoundKind::RelaxedChernoff => {
            let s = BernoulliSample::new(total, count)?;
            Ok(total * gamma_bound(direction, s, eps, false)?)
        }
        BernoulliBoundKind::MultChernoff => {
            let t = MultChernoffTerms::new(count, eps, prec)?;
            Ok(match direction {
                Direction::Upper => count + t.delta_plus,
                Direction::Lower => count - t.delta_minus,
            })
        }
        BernoulliBoundKind::Hoeffding => {
            let dev = sqrt(total / 2.0 * log(1.0 / eps));
            Ok(match direction {
                Direction::Upper => count + dev,
                Direction::Lower => count - dev,
            })
        }
        BernoulliBoundKind::ClopperPearsonBinomial => {
            let n = libm::round(total).max(1.0);
            let k = match direction {
                Direction::Lower => floor(count),
                Direction::Upper => ceil(count),
            }
            .min(n);
            let s = BernoulliSample::new(n, k)?;
            let f = cp_binomial(direction, s, eps, prec)?;
            Ok(match direction {
                Direction::Upper => n * (f + CP_DELTA_SHIFT),
                Direction::Lower => n * (f - CP_DELTA_SHIFT),
            })
        }
    }
}
