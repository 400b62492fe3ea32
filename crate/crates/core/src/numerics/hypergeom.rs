//! Hypergeometric log-pmf and log-CMF.

use super::{compensated_sum, gamma::ln_dbinom, LogProb, PrecisionConfig};
use crate::error::{Error, Result};
use alloc::vec::Vec;
use libm::{exp, log, log1p};

fn check(big_n: u64, k: u64, n: u64) -> Result<()> {
    if k > big_n {
        return Err(Error::domain("hypergeometric", "number of ones K exceeds population N"));
    }
    if n > big_n {
        return Err(Error::domain("hypergeometric", "sample size n exceeds population N"));
    }
    Ok(())
}

/// ln Pr[X = x] for X ~ Hypergeometric(N, K, n).
pub fn hg_log_pmf(big_n: u64, k: u64, n: u64, x: i64) -> Result<f64> {
    check(big_n, k, n)?;
    Ok(log_pmf_unchecked(big_n, k, n, x))
}

fn support(big_n: u64, k: u64, n: u64) -> (i64, i64) {
    let lo = n.saturating_sub(big_n - k) as i64;
    let hi = n.min(k) as i64;
    (lo, hi)
}

fn log_pmf_unchecked(big_n: u64, k: u64, n: u64, x: i64) -> f64 {
    let (lo, hi) = support(big_n, k, n);
    if x < lo || x > hi {
        return f64::NEG_INFINITY;
    }
    let (nf, kf, bf) = (big_n as f64, k as f64, n as f64);
    let xf = x as f64;
    // Centering every density at the sampling fraction keeps the bd0 terms
    // small near the mode, so the difference below loses no precision.
    let p = bf / nf;
    let q = (big_n - n) as f64 / nf;
    ln_dbinom(xf, kf, p, q) + ln_dbinom(bf - xf, nf - kf, p, q) - ln_dbinom(bf, nf, p, q)
}

// Relative size below which the rest of a geometric-decaying tail is dropped.
const TAIL_CUTOFF: f64 = 1.0 / (1u64 << 62) as f64;

/// ln Pr[X ≤ x] for X ~ Hypergeometric(N, K, n).
///
/// Sums whichever tail lies away from the mode, smallest term first, and
/// complements through `ln_1p` when the upper tail was summed.
pub fn hg_log_cmf(big_n: u64, k: u64, n: u64, x: i64, prec: &PrecisionConfig) -> Result<LogProb> {
    check(big_n, k, n)?;
    let (lo, hi) = support(big_n, k, n);
    if x < lo {
        return Ok(LogProb::ZERO_PROB);
    }
    if x >= hi {
        return Ok(LogProb::ONE);
    }
    let mode = (((n as u128 + 1) * (k as u128 + 1)) / (big_n as u128 + 2)) as i64;
    let (kf, bf) = (k as f64, n as f64);
    let nk = (big_n - k) as f64;
    let mut terms: Vec<f64> = Vec::new();
    let budget = prec.max_iter.max(1) as i64;

    if x < mode {
        // pmf(y-1)/pmf(y) = y (N-K-n+y) / ((K-y+1)(n-y+1))
        let mut t = 1.0f64;
        let mut acc = 1.0f64;
        terms.push(1.0);
        let mut y = x;
        while y > lo && (x - y) < budget {
            let yf = y as f64;
            let r = yf * (nk - bf + yf) / ((kf - yf + 1.0) * (bf - yf + 1.0));
            t *= r;
            acc += t;
            terms.push(t);
            y -= 1;
            if r < 1.0 && t * r / (1.0 - r) < TAIL_CUTOFF * acc {
                break;
            }
        }
        let s = compensated_sum(terms.iter().rev().copied());
        let lp = log_pmf_unchecked(big_n, k, n, x);
        Ok(LogProb::new(lp + log(s)))
    } else {
        // pmf(y+1)/pmf(y) = (K-y)(n-y) / ((y+1)(N-K-n+y+1))
        let mut t = 1.0f64;
        let mut acc = 1.0f64;
        terms.push(1.0);
        let mut y = x + 1;
        while y < hi && (y - x) < budget {
            let yf = y as f64;
            let r = (kf - yf) * (bf - yf) / ((yf + 1.0) * (nk - bf + yf + 1.0));
            t *= r;
            acc += t;
            terms.push(t);
            y += 1;
            if r < 1.0 && t * r / (1.0 - r) < TAIL_CUTOFF * acc {
                break;
            }
        }
        let s = compensated_sum(terms.iter().rev().copied());
        let upper = exp(log_pmf_unchecked(big_n, k, n, x + 1)) * s;
        if upper >= 1.0 {
            return Err(Error::domain("hg_log_cmf", "upper tail evaluated to >= 1"));
        }
        Ok(LogProb::new(log1p(-upper)))
    }
}
