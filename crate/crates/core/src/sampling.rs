//! Sampling without replacement: confidence upper bounds on the population
//! fraction of ones, and the threshold functions q^th_{N,n,ε}(x) that bound
//! the frequency of ones in the unsampled part.

use crate::bernoulli::RelaxedChernoffTerms;
use crate::error::{Error, Result};
use crate::numerics::{hg_log_cmf, PrecisionConfig};
use libm::{expm1, floor, log, sqrt};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SamplingBoundKind {
    RelaxedChernoff,
    ClopperPearsonHG,
    Serfling,
    EkertCombined,
    HushScovel,
    GreeneWellner,
}

impl SamplingBoundKind {
    pub const ALL: [SamplingBoundKind; 6] = [
        SamplingBoundKind::RelaxedChernoff,
        SamplingBoundKind::ClopperPearsonHG,
        SamplingBoundKind::Serfling,
        SamplingBoundKind::EkertCombined,
        SamplingBoundKind::HushScovel,
        SamplingBoundKind::GreeneWellner,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplingBoundKind::RelaxedChernoff => "relaxed_chernoff",
            SamplingBoundKind::ClopperPearsonHG => "cp_hg",
            SamplingBoundKind::Serfling => "serfling",
            SamplingBoundKind::EkertCombined => "ekert",
            SamplingBoundKind::HushScovel => "hush_scovel",
            SamplingBoundKind::GreeneWellner => "greene_wellner",
        }
    }

    /// Inverse of [`name`](Self::name).
    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Families that come with a confidence upper bound on K/N.
    pub fn has_confidence_bound(self) -> bool {
        !matches!(self, SamplingBoundKind::Serfling | SamplingBoundKind::EkertCombined)
    }
}

/// Which optimum of the Ekert bracket to report.
///
/// The bracket blows up at the edge of the feasible ξ set and exceeds 1 at
/// p+ξ = 1, so the maximum is never a useful threshold; the minimum is the
/// tightest valid choice and is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EkertDirection {
    Max,
    #[default]
    Min,
}

/// Population of `big_n` bits with `k` ones, of which `n` are tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HGSetting {
    pub big_n: u64,
    pub k: u64,
    pub n: u64,
}

impl HGSetting {
    pub fn new(big_n: u64, k: u64, n: u64) -> Result<Self> {
        if k > big_n || n > big_n {
            return Err(Error::domain("HGSetting", "need K <= N and n <= N"));
        }
        Ok(HGSetting { big_n, k, n })
    }

    pub fn p(&self) -> f64 {
        self.k as f64 / self.big_n as f64
    }

    /// Frequency of ones left in the unsampled part when the test saw `x`.
    pub fn q_hat(&self, x: u64) -> f64 {
        (self.k - x) as f64 / (self.big_n - self.n) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HushScovelTerms {
    pub big_n: f64,
    pub n: f64,
    pub tau: f64,
    pub p_plus: f64,
    /// Upper end of I_{N,n,ε} = [0, 1 − √(1+τ(N+1))/n].
    pub valid_max: f64,
}

impl HushScovelTerms {
    pub fn new(big_n: f64, n: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::domain("hush_scovel", "error probability must lie in (0, 1)"));
        }
        if !(n >= 1.0 && big_n >= n) {
            return Err(Error::domain("hush_scovel", "need N >= n >= 1"));
        }
        let tau = log(1.0 / eps) / (2.0 * (big_n + 2.0));
        let nn = n * n;
        let tn2 = tau * big_n * big_n;
        let p_plus = (tn2 + sqrt(tn2 * tn2 + 4.0 * (nn + tn2) * (1.0 + tau * (big_n + 1.0)))) / (2.0 * (nn + tn2));
        let valid_max = 1.0 - sqrt(1.0 + tau * (big_n + 1.0)) / n;
        Ok(HushScovelTerms {
            big_n,
            n,
            tau,
            p_plus,
            valid_max,
        })
    }

    /// α_{N,p} = (N+2)/((Np+1)(N−Np+1)).
    pub fn alpha(&self, p: f64) -> f64 {
        let np = self.big_n * p;
        (self.big_n + 2.0) / ((np + 1.0) * (self.big_n - np + 1.0))
    }

    /// Lower deviation z_{N,n,ε}(p), for p ≥ p⁺.
    pub fn z(&self, p: f64) -> f64 {
        let np = self.big_n * p;
        p - sqrt(1.0 + self.tau * (np + 1.0) * (self.big_n - np + 1.0)) / self.n
    }

    fn disc(&self, x: f64) -> f64 {
        let (bn, n, t) = (self.big_n, self.n, self.tau);
        let (n2, bn2) = (n * n, bn * bn);
        t * t * bn2 * (bn + 2.0) * (bn + 2.0) + 4.0 * t * (bn2 * n2 * x * (1.0 - x) + bn2 + (bn + 1.0) * n2) + 4.0 * n2
    }

    /// z⁻¹_{N,n,ε}(x).
    pub fn z_inv(&self, x: f64) -> f64 {
        let (bn, n, t) = (self.big_n, self.n, self.tau);
        (t * bn * bn + 2.0 * n * n * x + sqrt(self.disc(x))) / (2.0 * (n * n + t * bn * bn))
    }

    pub fn z_inv_slope(&self, x: f64) -> f64 {
        let (bn, n, t) = (self.big_n, self.n, self.tau);
        let dd = 4.0 * t * bn * bn * n * n * (1.0 - 2.0 * x);
        (2.0 * n * n + dd / (2.0 * sqrt(self.disc(x)))) / (2.0 * (n * n + t * bn * bn))
    }

    /// Γ⁺_{N,n,ε}(x), with sentinel 1+ε outside I_{N,n,ε}.
    pub fn gamma_plus(&self, x: f64, eps: f64) -> f64 {
        if x >= 0.0 && x <= self.valid_max {
            self.z_inv(x)
        } else {
            1.0 + eps
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreeneWellnerTerms {
    pub pi: f64,
    pub f_n: f64,
}

impl GreeneWellnerTerms {
    pub fn new(big_n: f64, n: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::domain("greene_wellner", "error probability must lie in (0, 1)"));
        }
        if !(n >= 1.0 && big_n > 1.0 && big_n >= n) {
            return Err(Error::domain("greene_wellner", "need N > 1 and N >= n >= 1"));
        }
        Ok(GreeneWellnerTerms {
            pi: 2.0 / (3.0 * n) * log(1.0 / eps),
            f_n: (n - 1.0) / (big_n - 1.0),
        })
    }

    fn s(&self) -> f64 {
        3.0 * self.pi * (1.0 - self.f_n)
    }

    fn disc(&self, x: f64) -> f64 {
        let (p, s) = (self.pi, self.s());
        p * p + s * (s + 4.0 * x * (1.0 - x) + 2.0 * p * (1.0 - 2.0 * x))
    }

    pub fn gamma_plus_raw(&self, x: f64) -> f64 {
        let s = self.s();
        (s + 2.0 * x + self.pi + sqrt(self.disc(x))) / (2.0 * (1.0 + s))
    }

    pub fn gamma_plus(&self, x: f64, eps: f64) -> f64 {
        if x >= 0.0 && x <= 1.0 - self.pi {
            self.gamma_plus_raw(x)
        } else {
            1.0 + eps
        }
    }

    pub fn gamma_plus_slope(&self, x: f64) -> f64 {
        let s = self.s();
        let de = s * (4.0 - 8.0 * x - 4.0 * self.pi);
        (2.0 + de / (2.0 * sqrt(self.disc(x)))) / (2.0 * (1.0 + s))
    }
}

/// 𝒞𝒫⁺_{N,n,ε}(x/n): the smallest grid value K/N ≥ x/n whose CMF at `x`
/// is at most ε, or (N+1)/N when no such K exists.
pub fn cp_plus_hg(big_n: u64, n: u64, eps: f64, x: u64, prec: &PrecisionConfig) -> Result<f64> {
    Ok(cp_plus_hg_count(big_n, n, eps, x, prec)? as f64 / big_n as f64)
}

/// Integer K* behind [`cp_plus_hg`] (N+1 when the target set is empty).
pub fn cp_plus_hg_count(big_n: u64, n: u64, eps: f64, x: u64, prec: &PrecisionConfig) -> Result<u64> {
    check_cp(big_n, n, eps, x)?;
    // Smallest K with K/N ≥ x/n.
    let k0 = ((x as u128 * big_n as u128).div_ceil(n as u128)) as u64;
    let ok = |k: u64| -> Result<bool> { Ok(prec.tail_within(hg_log_cmf(big_n, k, n, x as i64, prec)?, eps)) };
    if !ok(big_n)? {
        return Ok(big_n + 1);
    }
    let (mut lo, mut hi) = (k0, big_n);
    if ok(lo)? {
        return Ok(lo);
    }
    // Invariant: !ok(lo) && ok(hi); the CMF is nonincreasing in K.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn check_cp(big_n: u64, n: u64, eps: f64, x: u64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain("cp_plus_hg", "error probability must lie in (0, 1)"));
    }
    if n == 0 || n > big_n {
        return Err(Error::domain("cp_plus_hg", "need 1 <= n <= N"));
    }
    if x > n {
        return Err(Error::domain("cp_plus_hg", "count exceeds sample size"));
    }
    Ok(())
}

/// Converts a frequency on the 1/n grid to its integer count.
pub fn grid_count(n: u64, p_hat: f64) -> Result<u64> {
    let xf = p_hat * n as f64;
    let x = libm::round(xf);
    if !(x >= 0.0 && x <= n as f64) || (xf - x).abs() > 1e-9 * (n as f64).max(1.0) {
        return Err(Error::domain("cp_plus_hg", "p_hat is not on the 1/n grid"));
    }
    Ok(x as u64)
}

/// Largest grid count x with x/n ≤ p (robust to p·n landing just below an integer).
pub fn grid_floor(n: u64, p: f64) -> u64 {
    let xf = p * n as f64;
    let r = libm::round(xf);
    let x = if (xf - r).abs() <= 1e-9 * r.max(1.0) {
        r
    } else {
        floor(xf)
    };
    (x.max(0.0) as u64).min(n)
}

/// Confidence upper bound on the population fraction for the families that
/// provide one.
pub fn confidence_upper(
    kind: SamplingBoundKind,
    big_n: u64,
    n: u64,
    eps: f64,
    p_hat: f64,
    prec: &PrecisionConfig,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(kind.name(), "error probability must lie in (0, 1)"));
    }
    if n == 0 || n > big_n {
        return Err(Error::domain(kind.name(), "need N >= n >= 1"));
    }
    let (bn, nf) = (big_n as f64, n as f64);
    match kind {
        SamplingBoundKind::RelaxedChernoff => {
            let t = RelaxedChernoffTerms::new(nf, eps)?;
            let (lo, hi) = t.upper_interval();
            Ok(if p_hat >= lo && p_hat <= hi {
                t.gamma_plus(p_hat)
            } else {
                1.0 + eps
            })
        }
        SamplingBoundKind::HushScovel => Ok(HushScovelTerms::new(bn, nf, eps)?.gamma_plus(p_hat, eps)),
        SamplingBoundKind::GreeneWellner => Ok(GreeneWellnerTerms::new(bn, nf, eps)?.gamma_plus(p_hat, eps)),
        SamplingBoundKind::ClopperPearsonHG => cp_plus_hg(big_n, n, eps, grid_count(n, p_hat)?, prec),
        SamplingBoundKind::Serfling | SamplingBoundKind::EkertCombined => {
            Err(Error::domain(kind.name(), "family only provides a threshold function"))
        }
    }
}

/// Serfling-based threshold p + √(N(n+1)ln(1/ε) / (2(N−n)n²)).
pub fn serfling_threshold(big_n: f64, n: f64, eps: f64, p_th: f64) -> f64 {
    p_th + sqrt(big_n * (n + 1.0) * log(1.0 / eps) / (2.0 * (big_n - n) * n * n))
}

/// Threshold q^th_{N,n,ε}(p_th) of the selected family. Values above 1 are
/// returned as computed. The Ekert family uses its default direction.
///
/// For the Clopper–Pearson family p_th is first snapped down to the 1/n grid:
/// any accepted test frequency lies at or below that grid point, and the
/// threshold must hold there.
pub fn threshold(
    kind: SamplingBoundKind,
    big_n: u64,
    n: u64,
    eps: f64,
    p_th: f64,
    prec: &PrecisionConfig,
) -> Result<f64> {
    check_threshold(kind, big_n, n, eps, p_th)?;
    let (bn, nf) = (big_n as f64, n as f64);
    match kind {
        SamplingBoundKind::Serfling => Ok(serfling_threshold(bn, nf, eps, p_th)),
        SamplingBoundKind::EkertCombined => ekert_threshold(big_n, n, eps, p_th, EkertDirection::default()),
        SamplingBoundKind::ClopperPearsonHG => {
            let x = grid_floor(n, p_th);
            let k = cp_plus_hg_count(big_n, n, eps, x, prec)?;
            Ok((k as f64 - x as f64) / (bn - nf))
        }
        _ => {
            let g = confidence_upper(kind, big_n, n, eps, p_th, prec)?;
            Ok((bn * g - nf * p_th) / (bn - nf))
        }
    }
}

fn check_threshold(kind: SamplingBoundKind, big_n: u64, n: u64, eps: f64, p_th: f64) -> Result<()> {
    if n == 0 || n >= big_n {
        return Err(Error::domain(kind.name(), "threshold needs 1 <= n < N"));
    }
    if !(0.0..1.0).contains(&p_th) {
        return Err(Error::domain(kind.name(), "p_th must lie in [0, 1)"));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::domain(kind.name(), "error probability must lie in (0, 1]"));
    }
    if eps == 1.0 && kind != SamplingBoundKind::Serfling {
        return Err(Error::domain(kind.name(), "error probability must lie in (0, 1)"));
    }
    Ok(())
}

/// Terms of the Ekert bracket at a given ξ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkertTerms {
    pub xi: f64,
    pub g: f64,
    pub value: f64,
}

struct EkertProblem {
    big_n: f64,
    inv_gap: f64,
    a: f64,
    ln_eps: f64,
    p_th: f64,
}

impl EkertProblem {
    // Bracket value at integer j = N(p_th + ξ); None when infeasible.
    fn eval(&self, j: u64) -> Option<EkertTerms> {
        let jf = j as f64;
        let xi = jf / self.big_n - self.p_th;
        if !(xi > 0.0) {
            return None;
        }
        let w = self.a * xi * xi + self.ln_eps;
        if !(w > 0.0) {
            return None;
        }
        // ln[1/(ε − e^{−aξ²})] = −ln ε − ln(1 − e^{−w})
        let l = -self.ln_eps - log(-expm1(-w));
        let g = 1.0 / (jf + 1.0) + 1.0 / (self.big_n - jf + 1.0);
        let value = jf / self.big_n + sqrt(1.0 + l / (2.0 * g)) * self.inv_gap;
        Some(EkertTerms { xi, g, value })
    }
}

/// Ekert-combined threshold: optimum of the bracket over ξ = j/N − p_th with
/// integer j ≤ N satisfying ε > exp(−2Nnξ²/(N−n+1)).
pub fn ekert_threshold(big_n: u64, n: u64, eps: f64, p_th: f64, direction: EkertDirection) -> Result<f64> {
    Ok(ekert_terms(big_n, n, eps, p_th, direction)?.value)
}

pub fn ekert_terms(big_n: u64, n: u64, eps: f64, p_th: f64, direction: EkertDirection) -> Result<EkertTerms> {
    check_threshold(SamplingBoundKind::EkertCombined, big_n, n, eps, p_th)?;
    let (bn, nf) = (big_n as f64, n as f64);
    let prob = EkertProblem {
        big_n: bn,
        inv_gap: 1.0 / (bn - nf),
        a: 2.0 * bn * nf / (bn - nf + 1.0),
        ln_eps: log(eps),
        p_th,
    };
    let xi_min = sqrt(-prob.ln_eps / prob.a);
    let mut j0 = floor(bn * (p_th + xi_min)).max(0.0) as u64;
    while j0 <= big_n && prob.eval(j0).is_none() {
        j0 += 1;
    }
    if j0 > big_n {
        return Err(Error::Infeasible("no admissible ξ for the Ekert threshold".into()));
    }
    let span = big_n - j0;
    let better = |a: &EkertTerms, b: &EkertTerms| match direction {
        EkertDirection::Min => a.value < b.value,
        EkertDirection::Max => a.value > b.value,
    };
    let scan = |from: u64, to: u64, stride: u64, best: &mut EkertTerms| {
        let mut j = from;
        while j <= to {
            if direction == EkertDirection::Min && j as f64 / bn >= best.value {
                break; // every later term exceeds p_th + ξ ≥ current best
            }
            if let Some(t) = prob.eval(j) {
                if better(&t, best) {
                    *best = t;
                }
            }
            j += stride;
        }
    };
    let mut best = prob.eval(j0).expect("feasible start");
    const EXHAUSTIVE: u64 = 1 << 14;
    if span <= EXHAUSTIVE {
        scan(j0, big_n, 1, &mut best);
    } else {
        // Coarse stride, then local refinement around the coarse optimum.
        let stride = span.div_ceil(EXHAUSTIVE / 4);
        scan(j0, big_n, stride, &mut best);
        let jb = libm::round((best.xi + p_th) * bn) as u64;
        scan(
            jb.saturating_sub(stride).max(j0),
            (jb + stride).min(big_n),
            1,
            &mut best,
        );
        if direction == EkertDirection::Max {
            // The bracket is largest at the ends of the admissible range.
            scan(j0, (j0 + stride).min(big_n), 1, &mut best);
            scan(big_n.saturating_sub(stride).max(j0), big_n, 1, &mut best);
        }
    }
    Ok(best)
}

/// Whether the threshold function is locally nondecreasing at p_th, the
/// condition under which the conditional failure bound lifts to the protocol.
pub fn slope_check(kind: SamplingBoundKind, big_n: u64, n: u64, eps: f64, p_th: f64, prec: &PrecisionConfig) -> bool {
    if n == 0 || n >= big_n || !(0.0..0.5).contains(&p_th) || !(eps > 0.0 && eps < 1.0) {
        return false;
    }
    let (bn, nf) = (big_n as f64, n as f64);
    let ratio = nf / bn;
    match kind {
        SamplingBoundKind::Serfling | SamplingBoundKind::EkertCombined => true,
        SamplingBoundKind::RelaxedChernoff => match RelaxedChernoffTerms::new(nf, eps) {
            Ok(t) => p_th <= t.upper_interval().1 && t.gamma_plus_slope(p_th) >= ratio,
            Err(_) => false,
        },
        SamplingBoundKind::HushScovel => match HushScovelTerms::new(bn, nf, eps) {
            Ok(t) => p_th <= t.valid_max && t.z_inv_slope(p_th) >= ratio,
            Err(_) => false,
        },
        SamplingBoundKind::GreeneWellner => match GreeneWellnerTerms::new(bn, nf, eps) {
            Ok(t) => p_th <= 1.0 - t.pi && t.gamma_plus_slope(p_th) >= ratio,
            Err(_) => false,
        },
        SamplingBoundKind::ClopperPearsonHG => cp_grid_monotone(big_n, n, eps, grid_floor(n, p_th), prec),
    }
}

// The CP threshold (K*(x) − x)/(N−n) is nondecreasing on the grid exactly
// when K* is strictly increasing in x. K* is tracked incrementally with a
// galloping search since K*(x+1) ≥ K*(x).
fn cp_grid_monotone(big_n: u64, n: u64, eps: f64, x_max: u64, prec: &PrecisionConfig) -> bool {
    let ok = |k: u64, x: u64| -> bool {
        match hg_log_cmf(big_n, k, n, x as i64, prec) {
            Ok(lp) => prec.tail_within(lp, eps),
            Err(_) => false,
        }
    };
    let mut prev = match cp_plus_hg_count(big_n, n, eps, 0, prec) {
        Ok(k) => k,
        Err(_) => return false,
    };
    for x in 1..=x_max {
        if prev > big_n {
            return false;
        }
        let k0 = ((x as u128 * big_n as u128).div_ceil(n as u128)) as u64;
        let mut lo = prev.max(k0);
        let cur = if ok(lo, x) {
            lo
        } else {
            // Gallop for a passing K, then bisect back; `lo` always fails.
            let mut step = 1u64;
            let mut hi;
            loop {
                let cand = lo.saturating_add(step).min(big_n);
                if ok(cand, x) {
                    hi = cand;
                    break;
                }
                if cand == big_n {
                    hi = big_n + 1;
                    break;
                }
                lo = cand;
                step *= 2;
            }
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if ok(mid, x) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        };
        if cur <= prev {
            return false;
        }
        prev = cur;
    }
    true
}

/// One Hypergeometric(N, K, n) draw by sequential sampling without
/// replacement, driven by ChaCha keyed on (seed, stream).
pub fn hg_sample_stream(seed: u64, stream: u64, big_n: u64, k: u64, n: u64) -> Result<u64> {
    HGSetting::new(big_n, k, n)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let (mut pop, mut ones, mut hits) = (big_n, k, 0u64);
    for _ in 0..n {
        if ones == 0 {
            break;
        }
        if ones == pop {
            hits += n - (big_n - pop);
            break;
        }
        // Uniform index in [0, pop) via the high half of a 64×64 product.
        let idx = ((rng.next_u64() as u128 * pop as u128) >> 64) as u64;
        if idx < ones {
            hits += 1;
            ones -= 1;
        }
        pop -= 1;
    }
    Ok(hits)
}

pub fn hg_sample(seed: u64, big_n: u64, k: u64, n: u64) -> Result<u64> {
    hg_sample_stream(seed, 0, big_n, k, n)
}
