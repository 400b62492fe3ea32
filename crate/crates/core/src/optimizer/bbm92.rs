use super::penalized_length;
use super::search::{golden_max_int, Executor};
use crate::error::{Error, Result};
use crate::numerics::binary_entropy;
use crate::protocols::{key_length_bbm92, BBM92Inputs, KeyResult};
use crate::sampling::{ekert_threshold, slope_check, threshold, SamplingBoundKind};
use alloc::vec::Vec;
use libm::{log2, pow, round};

/// Unfloored BBM92 key length at `inputs` (−∞ when the slope condition or
/// the threshold itself fails).
pub fn bbm92_score(inputs: &BBM92Inputs) -> f64 {
    score(inputs, true)
}

fn score(inputs: &BBM92Inputs, check_slope: bool) -> f64 {
    if inputs.validate().is_err() {
        return f64::NEG_INFINITY;
    }
    let BBM92Inputs {
        big_n, n, p_th, eps_pe, ..
    } = *inputs;
    let prec = &inputs.precision;
    if check_slope && !slope_check(inputs.bound_kind, big_n, n, eps_pe, p_th, prec) {
        return f64::NEG_INFINITY;
    }
    let q = match inputs.bound_kind {
        SamplingBoundKind::EkertCombined => ekert_threshold(big_n, n, eps_pe, p_th, inputs.ekert_direction),
        k => threshold(k, big_n, n, eps_pe, p_th, prec),
    };
    let q = match q {
        Ok(q) => q,
        Err(Error::Infeasible(_)) => f64::INFINITY,
        Err(_) => return f64::NEG_INFINITY,
    };
    let keep = (big_n - n) as f64;
    let lambda_ec = inputs.lambda_ec_factor * keep * binary_entropy(p_th).unwrap_or(1.0);
    let tag = -log2(2.0 * inputs.eps_cor * inputs.eps_pa * inputs.eps_pa);
    penalized_length(keep, q, lambda_ec, tag)
}

/// Best test size n for block size N: a 200-point log-spaced scan over
/// [1, N−1] followed by golden-section refinement between the neighbours of
/// the best scan point. The returned result is never worse than the scan.
///
/// The slope condition does not change the length, and for the
/// Clopper–Pearson family it is far costlier than the threshold, so the
/// search first runs without it and only the chosen n is checked. Should
/// that check fail, the search is repeated with the condition enforced.
pub fn optimize_bbm92(big_n: u64, fixed: &BBM92Inputs, exec: &dyn Executor) -> Result<(u64, KeyResult)> {
    if big_n < 100 {
        return Err(Error::config("N", "BBM92 optimization needs N >= 100"));
    }
    let at = |n: u64| BBM92Inputs { big_n, n, ..*fixed };
    let mut best_n = search(big_n, fixed, exec, false);
    let mut res = key_length_bbm92(&at(best_n));
    if matches!(res, Err(Error::SlopeCondition { .. })) {
        best_n = search(big_n, fixed, exec, true);
        res = key_length_bbm92(&at(best_n));
    }
    let res = res.unwrap_or_else(|_| KeyResult {
        l: 0,
        rate: 0.0,
        eps_sec: fixed.eps_sec(),
        eps_cor: fixed.eps_cor,
        q_or_phi_threshold: f64::INFINITY,
        feasible: false,
    });
    Ok((best_n, res))
}

fn search(big_n: u64, fixed: &BBM92Inputs, exec: &dyn Executor, check_slope: bool) -> u64 {
    let at = |n: u64| BBM92Inputs { big_n, n, ..*fixed };
    let top = (big_n - 1) as f64;
    let mut grid: Vec<u64> = (0..200)
        .map(|i| round(pow(top, i as f64 / 199.0)).clamp(1.0, top) as u64)
        .collect();
    grid.dedup();
    let scores = exec.map(grid.len(), &|i| score(&at(grid[i]), check_slope));
    let mut bi = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[bi] {
            bi = i;
        }
    }
    let mut best_n = grid[bi];
    if scores[bi] > f64::NEG_INFINITY {
        let lo = grid[bi.saturating_sub(1)];
        let hi = grid[(bi + 1).min(grid.len() - 1)];
        let (n_g, s_g) = golden_max_int(lo, hi, |n| score(&at(n), check_slope));
        if s_g > scores[bi] {
            best_n = n_g;
        }
    }
    best_n
}
