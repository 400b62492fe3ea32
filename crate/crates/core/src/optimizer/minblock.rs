use super::bbm92::optimize_bbm92;
use super::decoy::{optimize_decoy, SearchSpace};
use super::search::Executor;
use crate::error::{Error, Result};
use crate::protocols::{BBM92Inputs, ChannelModel, DecoyInputs};
use alloc::vec::Vec;
use libm::{ceil, floor};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MinBlockOptions {
    pub start: u64,
    pub cap: u64,
    /// Relative bisection resolution.
    pub rel_tol: f64,
    /// Relative offset of the post-bisection consistency probes.
    pub verify: f64,
}

impl Default for MinBlockOptions {
    fn default() -> Self {
        MinBlockOptions {
            start: 500,
            cap: 100_000_000,
            rel_tol: 0.01,
            verify: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MinBlockReport {
    /// Smallest feasible N found, or None when nothing up to the cap is.
    pub n_min: Option<u64>,
    /// Every (N, feasible) evaluated, in order.
    pub trace: Vec<(u64, bool)>,
    /// True when a probe below n_min was feasible or one above was not,
    /// i.e. feasibility was not monotone near the answer.
    pub non_monotone: bool,
}

/// Smallest N with `feasible(N)`: exponential bracketing from `start`,
/// bisection to `rel_tol`, then probes at (1 ± verify)·N; a feasible probe
/// below restarts the bisection below it.
pub fn min_block_size(opts: &MinBlockOptions, mut feasible: impl FnMut(u64) -> bool) -> Result<MinBlockReport> {
    if opts.start < 2 || opts.cap < opts.start || !(opts.rel_tol > 0.0) || !(opts.verify >= 0.0) {
        return Err(Error::config(
            "minblock",
            "need 2 <= start <= cap, rel_tol > 0, verify >= 0",
        ));
    }
    let mut trace = Vec::new();
    let mut test = |n: u64, trace: &mut Vec<(u64, bool)>| {
        if let Some(&(_, f)) = trace.iter().find(|(m, _)| *m == n) {
            return f;
        }
        let f = feasible(n);
        trace.push((n, f));
        f
    };
    // Bracket (lo infeasible, hi feasible).
    let mut n = opts.start;
    let (mut lo, mut hi);
    if test(n, &mut trace) {
        hi = n;
        lo = 1;
        while hi > 2 {
            let m = hi / 2;
            if test(m, &mut trace) {
                hi = m;
            } else {
                lo = m;
                break;
            }
        }
    } else {
        loop {
            lo = n;
            if n >= opts.cap {
                return Ok(MinBlockReport {
                    n_min: None,
                    trace,
                    non_monotone: false,
                });
            }
            n = (n * 2).min(opts.cap);
            if test(n, &mut trace) {
                hi = n;
                break;
            }
        }
    }
    let mut non_monotone = false;
    let mut rounds = 0;
    loop {
        while hi - lo > 1 && (hi - lo) as f64 > opts.rel_tol * hi as f64 {
            let m = lo + (hi - lo) / 2;
            if test(m, &mut trace) {
                hi = m;
            } else {
                lo = m;
            }
        }
        let below = floor(hi as f64 * (1.0 - opts.verify)) as u64;
        let above = ceil(hi as f64 * (1.0 + opts.verify)) as u64;
        if below >= 1 && below < lo && test(below, &mut trace) {
            non_monotone = true;
            rounds += 1;
            if rounds > 8 {
                break;
            }
            // Restart below the feasible probe.
            hi = below;
            lo = (below / 2).max(1);
            while lo > 1 && test(lo, &mut trace) {
                hi = lo;
                lo = (lo / 2).max(1);
            }
            continue;
        }
        if above <= opts.cap && !test(above, &mut trace) {
            non_monotone = true;
        }
        break;
    }
    Ok(MinBlockReport {
        n_min: Some(hi),
        trace,
        non_monotone,
    })
}

/// Minimum N for which the BBM92 key length, optimized over n, is positive.
pub fn min_block_bbm92(fixed: &BBM92Inputs, opts: &MinBlockOptions, exec: &dyn Executor) -> Result<MinBlockReport> {
    fixed.precision.validate()?;
    min_block_size(opts, |n| {
        n >= 100 && optimize_bbm92(n, fixed, exec).map(|r| r.1.feasible).unwrap_or(false)
    })
}

/// Minimum N for which the optimized decoy key length is positive.
pub fn min_block_decoy(
    fixed: &DecoyInputs,
    model: &ChannelModel,
    space: &SearchSpace,
    opts: &MinBlockOptions,
    exec: &dyn Executor,
) -> Result<MinBlockReport> {
    model.validate()?;
    space.validate(fixed.intensities.omega)?;
    min_block_size(opts, |n| {
        n >= 1000
            && optimize_decoy(n, model, fixed, space, exec)
                .map(|r| r.1.feasible)
                .unwrap_or(false)
    })
}
