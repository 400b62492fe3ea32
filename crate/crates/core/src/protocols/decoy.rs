use super::channel::{channel_expectations, expected_key_qber, ChannelModel, ObservedCounts};
use super::{log2_inv, KeyResult};
use crate::bernoulli::{bernoulli_interval, BernoulliBoundKind, RelaxedChernoffTerms};
use crate::error::{Error, Result};
use crate::numerics::{binary_entropy, PrecisionConfig};
use crate::sampling::{
    cp_plus_hg, ekert_threshold, EkertDirection, GreeneWellnerTerms, HushScovelTerms, SamplingBoundKind,
};
use crate::Direction;
use alloc::vec::Vec;
use libm::{ceil, exp, floor, log, pow, round, sqrt};

/// Signal, decoy and vacuum intensities μ > ν > ω ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Intensities {
    pub mu: f64,
    pub nu: f64,
    pub omega: f64,
}

impl Intensities {
    pub fn as_array(&self) -> [f64; 3] {
        [self.mu, self.nu, self.omega]
    }

    /// μ(ν−ω) − ν² + ω², the denominator of the lower decoy bounds.
    pub fn lower_denominator(&self) -> f64 {
        self.mu * (self.nu - self.omega) - self.nu * self.nu + self.omega * self.omega
    }
}

/// Decoy-state BB84 configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecoyInputs {
    /// Test-basis probability q_X (q_Z = 1 − q_X).
    pub q_x: f64,
    pub intensities: Intensities,
    pub p_mu: f64,
    pub p_nu: f64,
    /// Key-basis block size N_Z.
    pub n_z: u64,
    /// Test-basis block size N_X.
    pub n_x: u64,
    /// Correctable key QBER; `None` uses the channel-model expectation.
    pub theta_th: Option<f64>,
    pub lambda_ec_factor: f64,
    pub eps_pe: f64,
    pub eps_cor: f64,
    pub eps_pa: f64,
    pub delta: f64,
    pub sampling_kind: SamplingBoundKind,
    pub bernoulli_kind: BernoulliBoundKind,
    pub ekert_direction: EkertDirection,
    /// Points per axis of the (u, v) grid over the B set (Ekert form only).
    pub b_grid: usize,
    pub precision: PrecisionConfig,
}

impl DecoyInputs {
    /// Paper settings (ω = 1e-4, ε_cor = ε_PA = δ = 1e-8, ε_PE = 4e-16,
    /// factor 1.19) with placeholder tunables, for a total block size N.
    pub fn reference(big_n: u64, sampling_kind: SamplingBoundKind, bernoulli_kind: BernoulliBoundKind) -> Self {
        let mut d = DecoyInputs {
            q_x: 0.3,
            intensities: Intensities {
                mu: 0.5,
                nu: 0.1,
                omega: 1e-4,
            },
            p_mu: 0.5,
            p_nu: 0.3,
            n_z: 0,
            n_x: 0,
            theta_th: None,
            lambda_ec_factor: 1.19,
            eps_pe: 4e-16,
            eps_cor: 1e-8,
            eps_pa: 1e-8,
            delta: 1e-8,
            sampling_kind,
            bernoulli_kind,
            ekert_direction: EkertDirection::default(),
            b_grid: 50,
            precision: PrecisionConfig::default(),
        };
        d.set_block(big_n);
        d
    }

    /// Splits N into N_Z = round(q_Z²/(q_Z²+q_X²)·N) and N_X = N − N_Z.
    pub fn set_block(&mut self, big_n: u64) {
        let qz = 1.0 - self.q_x;
        let frac = qz * qz / (qz * qz + self.q_x * self.q_x);
        let nz = round(frac * big_n as f64) as u64;
        self.n_z = nz.min(big_n);
        self.n_x = big_n - self.n_z;
    }

    pub fn block(&self) -> u64 {
        self.n_z + self.n_x
    }

    pub fn p_omega(&self) -> f64 {
        1.0 - self.p_mu - self.p_nu
    }

    /// (p_μ, p_ν, p_ω).
    pub fn probabilities(&self) -> [f64; 3] {
        [self.p_mu, self.p_nu, self.p_omega()]
    }

    /// τ₁ = Σ_k e^{−k} k p_k.
    pub fn tau1(&self) -> f64 {
        let ks = self.intensities.as_array();
        let ps = self.probabilities();
        (0..3).map(|i| exp(-ks[i]) * ks[i] * ps[i]).sum()
    }

    pub fn eps_sec(&self) -> f64 {
        2.0 * (sqrt(self.eps_pe) + self.delta) + self.eps_pa
    }

    /// Per-bound error probability ε = ε_PE / multiplier.
    pub fn eps_each(&self) -> f64 {
        self.eps_pe / eps_multiplier(self.sampling_kind) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let Intensities { mu, nu, omega } = self.intensities;
        if !(mu > nu && nu > omega && omega >= 0.0) {
            return Err(Error::config("intensities", "need mu > nu > omega >= 0"));
        }
        if !(self.intensities.lower_denominator() > 0.0) {
            return Err(Error::config("intensities", "need mu(nu-omega) > nu^2 - omega^2"));
        }
        for (name, v) in [("p_mu", self.p_mu), ("p_nu", self.p_nu), ("q_x", self.q_x)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::config(name, "must lie in (0, 1)"));
            }
        }
        if !(self.p_omega() > 0.0) {
            return Err(Error::config("p_nu", "p_mu + p_nu must be below 1"));
        }
        if self.n_z == 0 || self.n_x == 0 {
            return Err(Error::config("n_z", "both basis blocks must be nonempty"));
        }
        for (name, v) in [
            ("eps_pe", self.eps_pe),
            ("eps_cor", self.eps_cor),
            ("eps_pa", self.eps_pa),
            ("delta", self.delta),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::config(name, "must lie in (0, 1)"));
            }
        }
        if let Some(t) = self.theta_th {
            if !(0.0..=0.5).contains(&t) {
                return Err(Error::config("theta_th", "must lie in [0, 1/2]"));
            }
        }
        if !(self.lambda_ec_factor >= 0.0) {
            return Err(Error::config("lambda_ec_factor", "must be nonnegative"));
        }
        if self.sampling_kind == SamplingBoundKind::EkertCombined && self.b_grid < 2 {
            return Err(Error::config("b_grid", "need at least 2 points per axis"));
        }
        self.precision.validate()
    }
}

/// Single-photon decoy estimates, clamped to physical ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecoyBounds {
    pub tau1: f64,
    pub n1z_l: f64,
    pub n1z_u: f64,
    pub n1x_l: f64,
    pub n1x_u: f64,
    pub m1x_l: f64,
    pub m1x_u: f64,
    /// Single-photon test error rate estimate m1x_u / n1x_l.
    pub e1x: f64,
}

/// ε_PE = multiplier · ε for each sampling family.
pub fn eps_multiplier(kind: SamplingBoundKind) -> u32 {
    match kind {
        SamplingBoundKind::RelaxedChernoff
        | SamplingBoundKind::ClopperPearsonHG
        | SamplingBoundKind::HushScovel
        | SamplingBoundKind::GreeneWellner => 16,
        SamplingBoundKind::Serfling | SamplingBoundKind::EkertCombined => 13,
    }
}

struct Bounder<'a> {
    kind: BernoulliBoundKind,
    eps: f64,
    prec: &'a PrecisionConfig,
}

impl Bounder<'_> {
    fn b(&self, dir: Direction, count: f64, total: f64) -> Result<f64> {
        if total <= 0.0 {
            // No trials: the count is exactly zero.
            return Ok(0.0);
        }
        bernoulli_interval(self.kind, dir, self.eps, count.min(total), total, self.prec)
    }

    // [B⁺, B⁻] of one count.
    fn pm(&self, count: f64, total: f64) -> Result<(f64, f64)> {
        Ok((
            self.b(Direction::Upper, count, total)?,
            self.b(Direction::Lower, count, total)?,
        ))
    }
}

/// τ₁, n1z/n1x lower and upper bounds and m1x bounds from per-intensity
/// counts, each statistical term at error probability `eps_each`.
pub fn decoy_single_photon_bounds(counts: &ObservedCounts, inputs: &DecoyInputs, eps_each: f64) -> Result<DecoyBounds> {
    let Intensities { mu, nu, omega } = inputs.intensities;
    let denom = inputs.intensities.lower_denominator();
    if !(denom > 0.0) || !(nu > omega) {
        return Err(Error::config("intensities", "decoy denominators must be positive"));
    }
    let [p_mu, p_nu, p_om] = inputs.probabilities();
    let tau1 = inputs.tau1();
    let bd = Bounder {
        kind: inputs.bernoulli_kind,
        eps: eps_each,
        prec: &inputs.precision,
    };

    let lower = |minus_nu: f64, plus_om: f64, plus_mu: f64| {
        tau1 * mu / denom
            * (exp(nu) / p_nu * minus_nu
                - exp(omega) / p_om * plus_om
                - (nu * nu - omega * omega) / (mu * mu) * exp(mu) / p_mu * plus_mu)
    };
    let upper =
        |plus_nu: f64, minus_om: f64| tau1 / (nu - omega) * (exp(nu) / p_nu * plus_nu - exp(omega) / p_om * minus_om);

    let set = |c: [f64; 3], total: f64| -> Result<(f64, f64)> {
        let (mu_p, _) = bd.pm(c[0], total)?;
        let (nu_p, nu_m) = bd.pm(c[1], total)?;
        let (om_p, om_m) = bd.pm(c[2], total)?;
        Ok((lower(nu_m, om_p, mu_p), upper(nu_p, om_m)))
    };

    let (nz_tot, nx_tot) = (inputs.n_z as f64, inputs.n_x as f64);
    let m_tot = counts.m_x_total();
    let (n1z_l, n1z_u) = set(counts.n_z, nz_tot)?;
    let (n1x_l, n1x_u) = set(counts.n_x, nx_tot)?;
    let (m1x_l, m1x_u) = set(counts.m_x, m_tot)?;

    let clamp = |v: f64, hi: f64| if v.is_nan() { 0.0 } else { v.clamp(0.0, hi) };
    let b = DecoyBounds {
        tau1,
        n1z_l: clamp(n1z_l, nz_tot),
        n1z_u: clamp(n1z_u, nz_tot),
        n1x_l: clamp(n1x_l, nx_tot),
        n1x_u: clamp(n1x_u, nx_tot),
        m1x_l: clamp(m1x_l, m_tot),
        m1x_u: clamp(m1x_u, m_tot),
        e1x: 0.0,
    };
    let e1x = if b.n1x_l > 0.0 {
        b.m1x_u / b.n1x_l
    } else {
        f64::INFINITY
    };
    Ok(DecoyBounds { e1x, ..b })
}

/// φᵁ_{1,Z} for the simple-form families.
pub fn phase_error_upper(kind: SamplingBoundKind, b: &DecoyBounds, eps: f64, prec: &PrecisionConfig) -> Result<f64> {
    if !(b.n1x_l > 0.0 && b.n1z_l > 0.0) {
        return Err(Error::Infeasible("single-photon lower bounds vanish".into()));
    }
    let pop = b.n1z_u + b.n1x_u;
    let x = b.m1x_u / b.n1x_l;
    let affine = |gamma: f64| (pop * gamma - b.m1x_l) / b.n1z_l;
    match kind {
        SamplingBoundKind::RelaxedChernoff => {
            let t = RelaxedChernoffTerms::new(b.n1x_l, eps)?;
            let (lo, hi) = t.upper_interval();
            Ok(affine(if x >= lo && x <= hi { t.gamma_plus(x) } else { 1.0 + eps }))
        }
        SamplingBoundKind::Serfling => {
            Ok(x + sqrt(pop * (b.n1x_u + 1.0) * log(1.0 / eps) / (2.0 * b.n1z_l * b.n1x_l * b.n1x_l)))
        }
        SamplingBoundKind::HushScovel => Ok(affine(HushScovelTerms::new(pop, b.n1x_l, eps)?.gamma_plus(x, eps))),
        SamplingBoundKind::GreeneWellner => Ok(affine(GreeneWellnerTerms::new(pop, b.n1x_l, eps)?.gamma_plus(x, eps))),
        SamplingBoundKind::ClopperPearsonHG => {
            // Integer population and sample rounded against us; the count of
            // errors rounded up.
            let pop_i = ceil(pop) as u64;
            let n_i = floor(b.n1x_l) as u64;
            if n_i == 0 {
                return Err(Error::Infeasible("test sample rounds to zero".into()));
            }
            let x_i = (ceil(b.m1x_u) as u64).min(n_i);
            let cp = cp_plus_hg(pop_i, n_i, eps, x_i, prec)?;
            Ok((pop_i as f64 * cp - b.m1x_l) / b.n1z_l)
        }
        SamplingBoundKind::EkertCombined => Err(Error::domain(
            "phase_error_upper",
            "the Ekert family uses the B-set threshold form",
        )),
    }
}

/// Threshold record of the Ekert-form PE test.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EkertForm {
    pub n1z_th_l: f64,
    pub n1z_th_u: f64,
    pub n1x_th_l: f64,
    pub n1x_th_u: f64,
    pub m1x_th_u: f64,
    pub e1x_th: f64,
    /// Range of the population size u over the B set.
    pub u_range: (f64, f64),
    /// Range of the test size v over the B set.
    pub v_range: (f64, f64),
    pub phi1z_th: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PEForm {
    Simple { n1z_th: f64, phi1z_th: f64 },
    Ekert(EkertForm),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PEThresholds {
    pub form: PEForm,
    /// Correctable key QBER used for λ_EC.
    pub theta_th: f64,
}

impl PEThresholds {
    /// Single-photon key count entering the key length.
    pub fn n1z_th(&self) -> f64 {
        match self.form {
            PEForm::Simple { n1z_th, .. } => n1z_th,
            PEForm::Ekert(e) => e.n1z_th_l,
        }
    }

    pub fn phi1z_th(&self) -> f64 {
        match self.form {
            PEForm::Simple { phi1z_th, .. } => phi1z_th,
            PEForm::Ekert(e) => e.phi1z_th,
        }
    }
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points < 2 || hi <= lo || lo <= 0.0 {
        return alloc::vec![lo, hi];
    }
    let ratio = hi / lo;
    (0..points)
        .map(|i| lo * pow(ratio, i as f64 / (points - 1) as f64))
        .collect()
}

/// max over the B set of the Ekert threshold at e1x_th. Infeasible points
/// (no admissible ξ) make the maximum infinite.
fn ekert_phi(form: &EkertForm, eps: f64, dir: EkertDirection, points: usize) -> Result<f64> {
    if !(form.e1x_th < 1.0) {
        return Ok(f64::INFINITY);
    }
    // Integer population and sample sizes; the ranges are widened outward.
    let (u_lo, u_hi) = (floor(form.u_range.0), ceil(form.u_range.1));
    let (v_lo, v_hi) = (floor(form.v_range.0), ceil(form.v_range.1));
    if v_lo < 1.0 {
        return Ok(f64::INFINITY);
    }
    let us = log_grid(u_lo, u_hi, points);
    let vs = log_grid(v_lo, v_hi, points);
    let mut best = f64::NEG_INFINITY;
    for &u in &us {
        for &v in &vs {
            let (ui, vi) = (round(u) as u64, round(v) as u64);
            if ui <= vi {
                continue;
            }
            match ekert_threshold(ui, vi, eps, form.e1x_th, dir) {
                Ok(q) => best = best.max(q),
                Err(Error::Infeasible(_)) => return Ok(f64::INFINITY),
                Err(e) => return Err(e),
            }
        }
    }
    if best == f64::NEG_INFINITY {
        // B set empty after rounding (u ≤ v everywhere).
        return Ok(f64::INFINITY);
    }
    Ok(best)
}

/// PE thresholds set to the channel-model expectations.
pub fn pe_thresholds(inputs: &DecoyInputs, model: &ChannelModel) -> Result<PEThresholds> {
    inputs.validate()?;
    let counts = channel_expectations(model, inputs)?;
    let theta_th = match inputs.theta_th {
        Some(t) => t,
        None => expected_key_qber(model, inputs)?,
    };
    let eps = inputs.eps_each();
    let b = decoy_single_photon_bounds(&counts, inputs, eps)?;
    let form = match inputs.sampling_kind {
        SamplingBoundKind::EkertCombined => {
            let mut f = EkertForm {
                n1z_th_l: b.n1z_l,
                n1z_th_u: b.n1z_u,
                n1x_th_l: b.n1x_l,
                n1x_th_u: b.n1x_u,
                m1x_th_u: b.m1x_u,
                e1x_th: b.e1x,
                u_range: (b.n1z_l + b.n1x_l, b.n1z_u + b.n1x_u),
                v_range: (b.n1x_l, b.n1x_u),
                phi1z_th: f64::INFINITY,
            };
            f.phi1z_th = ekert_phi(&f, eps, inputs.ekert_direction, inputs.b_grid)?;
            PEForm::Ekert(f)
        }
        kind => {
            let phi = match phase_error_upper(kind, &b, eps, &inputs.precision) {
                Ok(p) => p,
                Err(Error::Infeasible(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            PEForm::Simple {
                n1z_th: b.n1z_l,
                phi1z_th: phi,
            }
        }
    };
    Ok(PEThresholds { form, theta_th })
}

/// Runs the PE test on `counts` and, when it passes, evaluates
/// l = ⌊n1z_th[1 − h(min(φ_th, ½))] − λ_EC − log₂(1/(2ε_cor ε_PA² δ))⌋.
pub fn key_length_decoy(inputs: &DecoyInputs, counts: &ObservedCounts, th: &PEThresholds) -> Result<KeyResult> {
    inputs.validate()?;
    let eps = inputs.eps_each();
    let (eps_sec, eps_cor) = (inputs.eps_sec(), inputs.eps_cor);
    let phi_th = th.phi1z_th();
    let b = decoy_single_photon_bounds(counts, inputs, eps)?;
    let passed = match th.form {
        PEForm::Simple { n1z_th, phi1z_th } => {
            let phi = match phase_error_upper(inputs.sampling_kind, &b, eps, &inputs.precision) {
                Ok(p) => p,
                Err(Error::Infeasible(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            b.n1z_l >= n1z_th && phi <= phi1z_th
        }
        PEForm::Ekert(f) => {
            b.n1z_l >= f.n1z_th_l
                && b.n1z_u <= f.n1z_th_u
                && b.n1x_l >= f.n1x_th_l
                && b.n1x_u <= f.n1x_th_u
                && b.m1x_u <= f.m1x_th_u
        }
    };
    if !passed || !(phi_th < 0.5) {
        return Ok(KeyResult::infeasible(eps_sec, eps_cor, phi_th));
    }
    let lambda_ec = inputs.lambda_ec_factor * inputs.n_z as f64 * binary_entropy(th.theta_th)?;
    let tag = log2_inv(2.0 * eps_cor * inputs.eps_pa * inputs.eps_pa * inputs.delta);
    let raw = th.n1z_th() * (1.0 - binary_entropy(phi_th.max(0.0))?) - lambda_ec - tag;
    Ok(KeyResult::from_raw(
        raw,
        inputs.block() as f64,
        eps_sec,
        eps_cor,
        phi_th,
    ))
}

/// Thresholds from the channel model, then the key length with observed
/// counts equal to their expectations.
pub fn evaluate_decoy(inputs: &DecoyInputs, model: &ChannelModel) -> Result<KeyResult> {
    let th = pe_thresholds(inputs, model)?;
    let counts = channel_expectations(model, inputs)?;
    key_length_decoy(inputs, &counts, &th)
}
