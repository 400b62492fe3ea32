//! JSON run configuration.
//!
//! Field names follow the usual symbols (ε_PE → `eps_pe`, λ_EC factor →
//! `lambda_ec_factor`, …). Every field except `protocol` has a default, and
//! unknown fields are rejected so typos do not silently fall back.

use crate::error::{CliError, CliResult};
use qkdstat_core::bernoulli::BernoulliBoundKind;
use qkdstat_core::optimizer::{MinBlockOptions, SearchSpace};
use qkdstat_core::protocols::{BBM92Inputs, ChannelModel, DecoyInputs, Intensities};
use qkdstat_core::sampling::{EkertDirection, SamplingBoundKind};
use qkdstat_core::PrecisionConfig;
use serde::{Deserialize, Deserializer, Serialize};
use std::path::{Path, PathBuf};

/// Environment variable holding a JSON object that overrides the default
/// precision settings, e.g. `{"rel_tol": 1e-10}`. A `precision` block in the
/// run configuration takes priority over it.
pub const PRECISION_ENV: &str = "QKDSTAT_PRECISION";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Bbm92,
    Decoy,
    Threshold,
}

/// Block sizes may be written as `100000` or `1e5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Count(pub u64);

impl<'de> Deserialize<'de> for Count {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if v >= 0.0 && v.fract() == 0.0 && v <= 9.007_199_254_740_992e15 {
            Ok(Count(v as u64))
        } else {
            Err(serde::de::Error::custom(format!(
                "expected a nonnegative integer, got {v}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySel {
    pub sampling: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bernoulli: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub eps_pe: f64,
    pub eps_cor: f64,
    pub eps_pa: f64,
    pub delta: f64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            eps_pe: 4e-16,
            eps_cor: 1e-8,
            eps_pa: 1e-8,
            delta: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSpec {
    /// Mutually exclusive with `eta`; 30 dB when both are absent.
    pub loss_db: Option<f64>,
    pub eta: Option<f64>,
    pub p_d: f64,
    pub e_mis: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        ChannelSpec {
            loss_db: None,
            eta: None,
            p_d: 6e-7,
            e_mis: 5e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRange {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub n_list: Option<Vec<Count>>,
    pub log_range: Option<LogRange>,
    /// Extra block sizes merged into the sweep (e.g. an experiment's N).
    pub markers: Vec<Count>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinRange {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSpec {
    pub population: Count,
    pub n: Count,
    pub eps: f64,
    #[serde(default)]
    pub p_th: Vec<f64>,
    #[serde(default)]
    pub p_th_range: Option<LinRange>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: Protocol,
    #[serde(default)]
    pub families: Vec<FamilySel>,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default = "default_p_th")]
    pub p_th: f64,
    #[serde(default = "default_lambda")]
    pub lambda_ec_factor: f64,
    #[serde(default)]
    pub channel: ChannelSpec,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub threshold: Option<ThresholdSpec>,
    /// Recorded in the metadata; every computation is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub precision: Option<PrecisionConfig>,
    #[serde(default)]
    pub ekert_direction: EkertDirection,
    #[serde(default = "default_b_grid")]
    pub b_grid: usize,
    #[serde(default)]
    pub search: SearchSpace,
    #[serde(default)]
    pub minblock: MinBlockOptions,
}

fn default_p_th() -> f64 {
    0.0455
}
fn default_lambda() -> f64 {
    1.19
}
fn default_omega() -> f64 {
    1e-4
}
fn default_b_grid() -> usize {
    50
}

/// A resolved family: the sampling bound and, for decoy, the Bernoulli bound.
pub type Family = (SamplingBoundKind, Option<BernoulliBoundKind>);

pub fn parse_sampling(s: &str) -> CliResult<SamplingBoundKind> {
    SamplingBoundKind::from_name(s).ok_or_else(|| {
        let names: Vec<_> = SamplingBoundKind::ALL.iter().map(|k| k.name()).collect();
        CliError::config(format!(
            "unknown sampling family '{s}' (expected one of {})",
            names.join(", ")
        ))
    })
}

pub fn parse_bernoulli(s: &str) -> CliResult<BernoulliBoundKind> {
    BernoulliBoundKind::from_name(s).ok_or_else(|| {
        let names: Vec<_> = BernoulliBoundKind::ALL.iter().map(|k| k.name()).collect();
        CliError::config(format!(
            "unknown bernoulli family '{s}' (expected one of {})",
            names.join(", ")
        ))
    })
}

/// Default precision, overridden by [`PRECISION_ENV`] when set.
pub fn env_precision() -> CliResult<PrecisionConfig> {
    match std::env::var(PRECISION_ENV) {
        Ok(s) if !s.trim().is_empty() => {
            let p: PrecisionConfig =
                serde_json::from_str(&s).map_err(|e| CliError::config(format!("{PRECISION_ENV}: {e}")))?;
            p.validate()
                .map_err(|e| CliError::config(format!("{PRECISION_ENV}: {e}")))?;
            Ok(p)
        }
        _ => Ok(PrecisionConfig::default()),
    }
}

fn in_unit(field: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(CliError::config(format!("{field}: must lie in (0, 1), got {v}")))
    }
}

impl ChannelSpec {
    pub fn model(&self) -> CliResult<ChannelModel> {
        let m = match (self.loss_db, self.eta) {
            (Some(_), Some(_)) => return Err(CliError::config("channel: give either loss_db or eta, not both")),
            (None, Some(eta)) => ChannelModel::from_eta(eta, self.p_d, self.e_mis)
                .map_err(|e| CliError::config(format!("channel.eta: {e}")))?,
            (loss, None) => ChannelModel {
                loss_db: loss.unwrap_or(30.0),
                p_d: self.p_d,
                e_mis: self.e_mis,
            },
        };
        m.validate().map_err(|e| CliError::config(format!("channel: {e}")))?;
        Ok(m)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form of the parsed configuration.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn precision(&self) -> CliResult<PrecisionConfig> {
        match self.precision {
            Some(p) => {
                p.validate().map_err(|e| CliError::config(format!("precision: {e}")))?;
                Ok(p)
            }
            None => env_precision(),
        }
    }

    /// Checks every field against the protocol invariants.
    pub fn validate(&self) -> CliResult<()> {
        let b = &self.budgets;
        in_unit("budgets.eps_pe", b.eps_pe)?;
        in_unit("budgets.eps_cor", b.eps_cor)?;
        in_unit("budgets.eps_pa", b.eps_pa)?;
        in_unit("budgets.delta", b.delta)?;
        if !(self.p_th > 0.0 && self.p_th < 0.5) {
            return Err(CliError::config(format!(
                "p_th: must lie in (0, 1/2), got {}",
                self.p_th
            )));
        }
        if !(self.lambda_ec_factor >= 0.0 && self.lambda_ec_factor.is_finite()) {
            return Err(CliError::config(
                "lambda_ec_factor: must be a finite nonnegative number",
            ));
        }
        if !(self.omega >= 0.0 && self.omega < 1.0) {
            return Err(CliError::config("omega: must lie in [0, 1)"));
        }
        if self.b_grid < 2 {
            return Err(CliError::config("b_grid: need at least 2 points per axis"));
        }
        self.precision()?;
        self.channel.model()?;
        self.search
            .validate(self.omega)
            .map_err(|e| CliError::config(format!("search: {e}")))?;
        let families = self.families()?;
        match self.protocol {
            Protocol::Threshold => {
                let t = self
                    .threshold
                    .as_ref()
                    .ok_or_else(|| CliError::config("threshold: required for protocol 'threshold'"))?;
                if !(t.n.0 >= 1 && t.n.0 < t.population.0) {
                    return Err(CliError::config("threshold.n: need 1 <= n < population"));
                }
                in_unit("threshold.eps", t.eps)?;
                let p = self.p_th_grid()?;
                if p.is_empty() {
                    return Err(CliError::config("threshold.p_th: give p_th values or p_th_range"));
                }
                if let Some(x) = p.iter().find(|x| !(**x >= 0.0 && **x < 1.0)) {
                    return Err(CliError::config(format!("threshold.p_th: {x} outside [0, 1)")));
                }
            }
            Protocol::Bbm92 | Protocol::Decoy => {
                let ns = self.block_sizes()?;
                let min = if self.protocol == Protocol::Bbm92 { 100 } else { 1000 };
                if let Some(n) = ns.iter().find(|n| **n < min) {
                    return Err(CliError::config(format!(
                        "sweep: block size {n} below the minimum {min}"
                    )));
                }
                if self.protocol == Protocol::Decoy {
                    if let Some(f) = families.iter().find(|f| f.1.is_none()) {
                        return Err(CliError::config(format!(
                            "families: decoy family '{}' needs a bernoulli bound",
                            f.0.name()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Resolved families; the four default families when none are given.
    pub fn families(&self) -> CliResult<Vec<Family>> {
        if self.families.is_empty() {
            return Ok(default_families(self.protocol));
        }
        self.families
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let s = parse_sampling(&f.sampling).map_err(|e| CliError::config(format!("families[{i}].{e}")))?;
                let b = match &f.bernoulli {
                    Some(b) => Some(parse_bernoulli(b).map_err(|e| CliError::config(format!("families[{i}].{e}")))?),
                    None => None,
                };
                Ok((s, b))
            })
            .collect()
    }

    /// Sorted, deduplicated block sizes of the sweep.
    pub fn block_sizes(&self) -> CliResult<Vec<u64>> {
        let s = &self.sweep;
        let mut out: Vec<u64> = match (&s.n_list, &s.log_range) {
            (Some(_), Some(_)) => return Err(CliError::config("sweep: give either n_list or log_range, not both")),
            (Some(list), None) => list.iter().map(|c| c.0).collect(),
            (None, Some(r)) => {
                if !(r.start >= 1.0 && r.stop >= r.start && r.points >= 1) {
                    return Err(CliError::config(
                        "sweep.log_range: need 1 <= start <= stop and points >= 1",
                    ));
                }
                let step = if r.points > 1 {
                    (r.stop / r.start).ln() / (r.points - 1) as f64
                } else {
                    0.0
                };
                (0..r.points)
                    .map(|i| (r.start * (step * i as f64).exp()).round() as u64)
                    .collect()
            }
            (None, None) => Vec::new(),
        };
        out.extend(s.markers.iter().map(|c| c.0));
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    pub fn p_th_grid(&self) -> CliResult<Vec<f64>> {
        let Some(t) = &self.threshold else {
            return Ok(Vec::new());
        };
        let mut p = t.p_th.clone();
        if let Some(r) = &t.p_th_range {
            if r.points < 1 || r.stop < r.start || r.start.is_nan() {
                return Err(CliError::config(
                    "threshold.p_th_range: need stop >= start and points >= 1",
                ));
            }
            let step = if r.points > 1 {
                (r.stop - r.start) / (r.points - 1) as f64
            } else {
                0.0
            };
            p.extend((0..r.points).map(|i| r.start + step * i as f64));
        }
        Ok(p)
    }

    pub fn bbm92_inputs(&self, big_n: u64, kind: SamplingBoundKind) -> CliResult<BBM92Inputs> {
        Ok(BBM92Inputs {
            big_n,
            n: 1,
            p_th: self.p_th,
            lambda_ec_factor: self.lambda_ec_factor,
            eps_pe: self.budgets.eps_pe,
            eps_cor: self.budgets.eps_cor,
            eps_pa: self.budgets.eps_pa,
            bound_kind: kind,
            ekert_direction: self.ekert_direction,
            precision: self.precision()?,
        })
    }

    pub fn decoy_inputs(&self, big_n: u64, s: SamplingBoundKind, b: BernoulliBoundKind) -> CliResult<DecoyInputs> {
        let mut d = DecoyInputs::reference(big_n, s, b);
        d.intensities = Intensities {
            omega: self.omega,
            ..d.intensities
        };
        d.lambda_ec_factor = self.lambda_ec_factor;
        d.eps_pe = self.budgets.eps_pe;
        d.eps_cor = self.budgets.eps_cor;
        d.eps_pa = self.budgets.eps_pa;
        d.delta = self.budgets.delta;
        d.ekert_direction = self.ekert_direction;
        d.b_grid = self.b_grid;
        d.precision = self.precision()?;
        Ok(d)
    }
}

/// The four curves compared for each protocol.
pub fn default_families(protocol: Protocol) -> Vec<Family> {
    use BernoulliBoundKind as B;
    use SamplingBoundKind as S;
    match protocol {
        Protocol::Bbm92 | Protocol::Threshold => {
            vec![
                (S::RelaxedChernoff, None),
                (S::ClopperPearsonHG, None),
                (S::Serfling, None),
                (S::EkertCombined, None),
            ]
        }
        Protocol::Decoy => vec![
            (S::RelaxedChernoff, Some(B::RelaxedChernoff)),
            (S::ClopperPearsonHG, Some(B::ClopperPearsonBinomial)),
            (S::EkertCombined, Some(B::MultChernoff)),
            (S::EkertCombined, Some(B::Hoeffding)),
        ],
    }
}
