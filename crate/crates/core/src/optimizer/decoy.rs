use super::penalized_length;
use super::search::{nelder_mead_max, Executor};
use crate::error::{Error, Result};
use crate::numerics::binary_entropy;
use crate::protocols::{evaluate_decoy, pe_thresholds, ChannelModel, DecoyInputs, KeyResult};
use alloc::vec::Vec;
use libm::log2;

/// Tunable decoy parameters (μ, ν, p_μ, p_ν, q_X).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecoyParams {
    pub mu: f64,
    pub nu: f64,
    pub p_mu: f64,
    pub p_nu: f64,
    pub q_x: f64,
}

impl DecoyParams {
    fn to_array(self) -> [f64; 5] {
        [self.mu, self.nu, self.p_mu, self.p_nu, self.q_x]
    }

    fn from_array(a: [f64; 5]) -> Self {
        DecoyParams {
            mu: a[0],
            nu: a[1],
            p_mu: a[2],
            p_nu: a[3],
            q_x: a[4],
        }
    }

    /// `fixed` with these tunables and block size N.
    pub fn apply(&self, fixed: &DecoyInputs, big_n: u64) -> DecoyInputs {
        let mut d = *fixed;
        d.intensities.mu = self.mu;
        d.intensities.nu = self.nu;
        d.p_mu = self.p_mu;
        d.p_nu = self.p_nu;
        d.q_x = self.q_x;
        d.set_block(big_n);
        d
    }
}

/// Box constraints and search effort for [`optimize_decoy`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SearchSpace {
    pub mu: (f64, f64),
    /// Gap kept between ν and both ω and μ.
    pub nu_margin: f64,
    pub p_mu: (f64, f64),
    pub p_nu: (f64, f64),
    /// Smallest p_ω allowed.
    pub p_omega_min: f64,
    pub q_x: (f64, f64),
    /// Coarse grid axes: μ, ν/μ, p_μ, p_ν, q_X.
    pub grid_mu: Vec<f64>,
    pub grid_nu_frac: Vec<f64>,
    pub grid_p_mu: Vec<f64>,
    pub grid_p_nu: Vec<f64>,
    pub grid_q_x: Vec<f64>,
    /// Number of best grid points used as Nelder–Mead starts.
    pub starts: usize,
    pub max_evals: usize,
    /// Points per axis of the Ekert B grid while searching; the final
    /// evaluation always uses the grid of the fixed inputs.
    pub search_b_grid: Option<usize>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            mu: (0.1, 1.0),
            nu_margin: 1e-3,
            p_mu: (0.05, 0.9),
            p_nu: (0.05, 0.9),
            p_omega_min: 0.01,
            q_x: (0.01, 0.5),
            grid_mu: alloc::vec![0.3, 0.5, 0.7],
            grid_nu_frac: alloc::vec![0.1, 0.2, 0.4],
            grid_p_mu: alloc::vec![0.05, 0.2, 0.5],
            grid_p_nu: alloc::vec![0.2, 0.45, 0.7],
            grid_q_x: alloc::vec![0.1, 0.25, 0.45],
            starts: 3,
            max_evals: 300,
            search_b_grid: Some(12),
        }
    }
}

impl SearchSpace {
    pub fn validate(&self, omega: f64) -> Result<()> {
        let ok = |r: (f64, f64)| r.0 > 0.0 && r.0 <= r.1 && r.1 <= 1.0;
        if !ok(self.mu) || !ok(self.p_mu) || !ok(self.p_nu) || !ok(self.q_x) {
            return Err(Error::config("search", "ranges must satisfy 0 < lo <= hi <= 1"));
        }
        if self.q_x.0 >= 1.0 || self.p_mu.0 + self.p_nu.0 + self.p_omega_min >= 1.0 {
            return Err(Error::config("search", "probability ranges leave no feasible point"));
        }
        if self.mu.1 <= omega + 2.0 * self.nu_margin {
            return Err(Error::config("search", "mu range leaves no room for nu above omega"));
        }
        if [
            &self.grid_mu,
            &self.grid_nu_frac,
            &self.grid_p_mu,
            &self.grid_p_nu,
            &self.grid_q_x,
        ]
        .iter()
        .any(|g| g.is_empty())
        {
            return Err(Error::config("search", "grid axes must be nonempty"));
        }
        Ok(())
    }

    /// Clamps a point into the feasible box: μ range, ω + m ≤ ν ≤ μ − ω − m,
    /// p ranges with p_μ + p_ν ≤ 1 − p_ω,min, q_X range.
    pub fn project(&self, x: [f64; 5], omega: f64) -> [f64; 5] {
        let m = self.nu_margin;
        let mu_lo = self.mu.0.max(2.0 * omega + 2.0 * m + 1e-12);
        let mu = x[0].clamp(mu_lo, self.mu.1.max(mu_lo));
        let nu = x[1].clamp(omega + m, mu - omega - m);
        let p_mu = x[2].clamp(self.p_mu.0, self.p_mu.1);
        let p_nu_hi = self.p_nu.1.min(1.0 - self.p_omega_min - p_mu);
        let p_nu = x[3].clamp(self.p_nu.0.min(p_nu_hi), p_nu_hi);
        let q_x = x[4].clamp(self.q_x.0, self.q_x.1);
        [mu, nu, p_mu, p_nu, q_x]
    }

    fn grid(&self, omega: f64) -> Vec<[f64; 5]> {
        let mut out: Vec<[f64; 5]> = Vec::new();
        for &mu in &self.grid_mu {
            for &fr in &self.grid_nu_frac {
                for &pm in &self.grid_p_mu {
                    for &pn in &self.grid_p_nu {
                        for &qx in &self.grid_q_x {
                            let p = self.project([mu, fr * mu, pm, pn, qx], omega);
                            if !out.contains(&p) {
                                out.push(p);
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Unfloored decoy key length with PE thresholds at the channel-model
/// expectations (−∞ on invalid inputs).
pub fn decoy_score(inputs: &DecoyInputs, model: &ChannelModel) -> f64 {
    let th = match pe_thresholds(inputs, model) {
        Ok(t) => t,
        Err(_) => return f64::NEG_INFINITY,
    };
    let lambda_ec = inputs.lambda_ec_factor * inputs.n_z as f64 * binary_entropy(th.theta_th).unwrap_or(1.0);
    let tag = -log2(2.0 * inputs.eps_cor * inputs.eps_pa * inputs.eps_pa * inputs.delta);
    penalized_length(th.n1z_th(), th.phi1z_th(), lambda_ec, tag)
}

/// Maximizes the decoy key length over (μ, ν, p_μ, p_ν, q_X) at block size
/// N: coarse grid scan through `exec`, then projected Nelder–Mead from the
/// best few grid points. The result is never worse than the best grid point.
pub fn optimize_decoy(
    big_n: u64,
    model: &ChannelModel,
    fixed: &DecoyInputs,
    space: &SearchSpace,
    exec: &dyn Executor,
) -> Result<(DecoyParams, KeyResult)> {
    if big_n < 1000 {
        return Err(Error::config("N", "decoy optimization needs N >= 1000"));
    }
    model.validate()?;
    let omega = fixed.intensities.omega;
    space.validate(omega)?;
    let mut search_fixed = *fixed;
    if let Some(g) = space.search_b_grid {
        search_fixed.b_grid = g.max(2);
    }
    let score = |x: &[f64; 5]| decoy_score(&DecoyParams::from_array(*x).apply(&search_fixed, big_n), model);

    let grid = space.grid(omega);
    let scores = exec.map(grid.len(), &|i| score(&grid[i]));
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut best = (grid[order[0]], scores[order[0]]);
    if best.1 > f64::NEG_INFINITY {
        let project = |x: [f64; 5]| space.project(x, omega);
        let step = [0.1, 0.02, 0.05, 0.05, 0.05];
        for &i in order.iter().take(space.starts.max(1)) {
            if scores[i] == f64::NEG_INFINITY {
                break;
            }
            let mut f = |x: &[f64; 5]| score(x);
            let (x, v) = nelder_mead_max(grid[i], step, &project, &mut f, space.max_evals, 1e-9);
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    let params = DecoyParams::from_array(best.0);
    let inputs = params.apply(fixed, big_n);
    let res = evaluate_decoy(&inputs, model).unwrap_or(KeyResult {
        l: 0,
        rate: 0.0,
        eps_sec: fixed.eps_sec(),
        eps_cor: fixed.eps_cor,
        q_or_phi_threshold: f64::INFINITY,
        feasible: false,
    });
    Ok((params, res))
}

impl From<DecoyParams> for [f64; 5] {
    fn from(p: DecoyParams) -> Self {
        p.to_array()
    }
}
