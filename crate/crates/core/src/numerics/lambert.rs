//! Lambert W on the real branches W₀ and W₋₁.

use super::PrecisionConfig;
use crate::error::{Error, Result};
use libm::{exp, expm1, fabs, log, log1p, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Branch {
    /// W₀, defined on [−1/e, ∞), values ≥ −1.
    Principal,
    /// W₋₁, defined on [−1/e, 0), values ≤ −1.
    Lower,
}

const INV_E: f64 = 0.367_879_441_171_442_33;
const E: f64 = core::f64::consts::E;

// Series about the branch point in p = ±√(2(ex+1)).
fn branch_point_series(p: f64) -> f64 {
    -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
}

/// w with w·eʷ = x on the requested branch.
pub fn lambert_w(branch: Branch, x: f64, prec: &PrecisionConfig) -> Result<f64> {
    if x.is_nan() || x < -INV_E * (1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::domain("lambert_w", "argument below the branch point -1/e"));
    }
    let ex1 = (E * x + 1.0).max(0.0);
    if ex1 == 0.0 {
        return Ok(-1.0);
    }
    match branch {
        Branch::Principal => principal(x, ex1, prec),
        Branch::Lower => {
            if x >= 0.0 {
                return Err(Error::domain("lambert_w", "lower branch requires -1/e <= x < 0"));
            }
            lower(x, ex1, prec)
        }
    }
}

fn principal(x: f64, ex1: f64, prec: &PrecisionConfig) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    if x > 1e100 {
        // Newton on w + ln w = ln x; w·eʷ would overflow intermediate steps.
        let lx = log(x);
        let mut w = lx - log(lx);
        for _ in 0..prec.max_iter {
            let step = (w + log(w) - lx) * w / (w + 1.0);
            w -= step;
            if fabs(step) <= 4.0 * f64::EPSILON * w {
                return Ok(w);
            }
        }
        return Err(Error::NoConvergence {
            what: "lambert_w",
            iters: prec.max_iter,
        });
    }
    let w0 = if x < -0.32 {
        branch_point_series(sqrt(2.0 * ex1))
    } else if x < 3.0 {
        log1p(x)
    } else {
        let l1 = log(x);
        let l2 = log(l1);
        l1 - l2 + l2 / l1
    };
    let (lo, hi) = if x < 0.0 { (-1.0, 0.0) } else { (0.0, log1p(x).max(1.0)) };
    halley(x, w0, lo, hi, true, prec)
}

fn lower(x: f64, ex1: f64, prec: &PrecisionConfig) -> Result<f64> {
    if x > -1e-30 {
        // Solve w + ln(−w) = ln(−x) for very small |x|.
        let lx = log(-x);
        let mut w = lx - log(-lx);
        for _ in 0..prec.max_iter {
            let step = (w + log(-w) - lx) * w / (w + 1.0);
            w -= step;
            if fabs(step) <= 4.0 * f64::EPSILON * fabs(w) {
                return Ok(w);
            }
        }
        return Err(Error::NoConvergence {
            what: "lambert_w",
            iters: prec.max_iter,
        });
    }
    let w0 = if x < -0.25 {
        branch_point_series(-sqrt(2.0 * ex1))
    } else {
        let l1 = log(-x);
        let l2 = log(-l1);
        l1 - l2 + l2 / l1
    };
    let lo = 2.0 * log(-x) - 2.0;
    halley(x, w0.max(lo).min(-1.0), lo, -1.0, false, prec)
}

// Bracketed Halley iteration; `increasing` tells the sign of d(w eʷ)/dw on
// the bracket so the bracket can be updated from the residual sign.
fn halley(x: f64, w0: f64, mut lo: f64, mut hi: f64, increasing: bool, prec: &PrecisionConfig) -> Result<f64> {
    let mut w = w0;
    for _ in 0..prec.max_iter {
        let ew = exp(w);
        let f = w * ew - x;
        // Near the branch point w·eʷ is flat and the residual stalls at the
        // rounding level of x long before the steps shrink.
        if fabs(f) <= 4.0 * f64::EPSILON * fabs(x) {
            return Ok(w);
        }
        if (f > 0.0) == increasing {
            hi = hi.min(w);
        } else {
            lo = lo.max(w);
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let mut w_new = w - f / denom;
        if !(w_new >= lo && w_new <= hi) || !w_new.is_finite() {
            w_new = 0.5 * (lo + hi);
        }
        let step = fabs(w_new - w);
        w = w_new;
        if step <= 4.0 * f64::EPSILON * fabs(w).max(1e-300) || hi - lo <= 4.0 * f64::EPSILON * fabs(w) {
            return Ok(w);
        }
    }
    Err(Error::NoConvergence {
        what: "lambert_w",
        iters: prec.max_iter,
    })
}

/// 1 + W_branch(−e^{−(1+u)}) for u ≥ 0, without cancellation near the
/// branch point.
///
/// Writing W = −(1+s) turns w·eʷ = −e^{−(1+u)} into s − ln(1+s) = u, which is
/// well conditioned in s; the principal branch has s ∈ (−1, 0] and the lower
/// branch s ≥ 0. The result is −s.
pub fn lambert_w_neg_exp_plus_one(branch: Branch, u: f64, prec: &PrecisionConfig) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::domain("lambert_w", "shifted argument must be nonnegative"));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    match branch {
        Branch::Lower => {
            // s > 0: Newton on s − ln(1+s) − u (convex, increasing).
            let mut s = if u < 1.0 {
                sqrt(2.0 * u) + 2.0 * u / 3.0
            } else {
                u + log1p(u + log1p(u))
            };
            let (mut lo, mut hi) = (0.0f64, u + 2.0 * log1p(u) + 2.0);
            for _ in 0..prec.max_iter {
                let f = s_minus_log1p(s) - u;
                if f > 0.0 {
                    hi = hi.min(s);
                } else {
                    lo = lo.max(s);
                }
                let mut s_new = s - f * (1.0 + s) / s;
                if !(s_new > lo && s_new < hi) {
                    s_new = 0.5 * (lo + hi);
                }
                let step = fabs(s_new - s);
                s = s_new;
                if step <= 4.0 * f64::EPSILON * s {
                    return Ok(-s);
                }
            }
            Err(Error::NoConvergence {
                what: "lambert_w lower branch",
                iters: prec.max_iter,
            })
        }
        Branch::Principal => {
            // With t = ln(1+s) ≤ 0 the equation reads expm1(t) − t = u.
            let mut t = if u < 0.5 { -sqrt(2.0 * u) + u / 3.0 } else { -1.0 - u };
            let (mut lo, mut hi) = (-u - 2.0, 0.0f64);
            for _ in 0..prec.max_iter {
                let g = expm1(t) - t - u;
                if g > 0.0 {
                    lo = lo.max(t);
                } else {
                    hi = hi.min(t);
                }
                let mut t_new = t - g / expm1(t);
                if !(t_new > lo && t_new < hi) {
                    t_new = 0.5 * (lo + hi);
                }
                let step = fabs(t_new - t);
                t = t_new;
                if step <= 4.0 * f64::EPSILON * fabs(t) {
                    return Ok(-expm1(t));
                }
            }
            Err(Error::NoConvergence {
                what: "lambert_w principal branch",
                iters: prec.max_iter,
            })
        }
    }
}

/// s − ln(1+s), with a series near 0 to avoid cancellation.
fn s_minus_log1p(s: f64) -> f64 {
    if fabs(s) < 0.1 {
        let mut term = s * s;
        let mut sum = 0.0;
        let mut k = 2.0;
        let mut sign = 1.0;
        loop {
            let add = sign * term / k;
            sum += add;
            if fabs(add) <= 1e-17 * fabs(sum) {
                return sum;
            }
            term *= s;
            k += 1.0;
            sign = -sign;
        }
    }
    s - log1p(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_form_matches_direct() {
        let p = PrecisionConfig::default();
        for &u in &[0.3, 1.0, 5.0, 40.0] {
            let x = -exp(-(1.0 + u));
            for br in [Branch::Principal, Branch::Lower] {
                let direct = lambert_w(br, x, &p).unwrap() + 1.0;
                let shifted = lambert_w_neg_exp_plus_one(br, u, &p).unwrap();
                assert!((direct - shifted).abs() < 1e-12, "{br:?} u={u}: {direct} vs {shifted}");
            }
        }
    }
}
