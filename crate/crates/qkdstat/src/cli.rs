use crate::commands::{self, BoundRequest};
use crate::config::{env_precision, parse_bernoulli, parse_sampling, Protocol, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{sweep_rows, write_table, BBM92_COLUMNS, DECOY_COLUMNS, THRESHOLD_COLUMNS};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qkdstat_core::optimizer::DecoyParams;
use qkdstat_core::sampling::{EkertDirection, SamplingBoundKind};
use qkdstat_core::Direction;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "qkdstat", version, about = "Finite-statistics bounds and key rates for QKD")]
pub struct Cli {
    /// Worker threads for sweeps and searches (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Evaluate a Bernoulli interval, a sampling confidence bound or a threshold.
    Bound(BoundArgs),
    /// Threshold q^th for several families and tolerated error rates.
    Threshold(ThresholdArgs),
    /// Key length for one block size.
    #[command(subcommand)]
    Keyrate(KeyrateCmd),
    /// Run a configured sweep and write CSV.
    Sweep(SweepArgs),
    /// Minimum block size per family, with pairwise reductions.
    Minblock(MinblockArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirArg {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EkertArg {
    Min,
    Max,
}

impl From<EkertArg> for EkertDirection {
    fn from(a: EkertArg) -> Self {
        match a {
            EkertArg::Min => EkertDirection::Min,
            EkertArg::Max => EkertDirection::Max,
        }
    }
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Family name (sampling families when --population is given).
    #[arg(long, required_unless_present = "all")]
    pub kind: Option<String>,
    /// Evaluate every applicable family.
    #[arg(long)]
    pub all: bool,
    #[arg(long, value_enum, default_value = "upper")]
    pub direction: DirArg,
    /// Trials (Bernoulli) or sample size (sampling).
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub count: Option<f64>,
    #[arg(long)]
    pub population: Option<u64>,
    #[arg(long)]
    pub eps: f64,
    /// Tolerated test error rate; selects the threshold form.
    #[arg(long = "p-th")]
    pub p_th: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub population: u64,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub eps: f64,
    #[arg(long = "p-th", required = true, num_args = 1.., value_delimiter = ',')]
    pub p_th: Vec<f64>,
    /// Families (default: relaxed_chernoff, cp_hg, serfling, ekert).
    #[arg(long, value_delimiter = ',')]
    pub kind: Vec<String>,
    #[arg(long, value_enum, default_value = "min")]
    pub ekert: EkertArg,
}

#[derive(Debug, Subcommand)]
pub enum KeyrateCmd {
    Bbm92(Bbm92Args),
    Decoy(DecoyArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration supplying budgets, channel and search settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Block size N.
    #[arg(long)]
    pub block: f64,
    #[arg(long)]
    pub family: String,
}

#[derive(Debug, Args)]
pub struct Bbm92Args {
    #[command(flatten)]
    pub common: Common,
    /// Test sample size; optimized when absent.
    #[arg(long)]
    pub n: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DecoyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub bernoulli: String,
    /// μ, ν, p_μ, p_ν, q_X; optimized when absent.
    #[arg(long, value_delimiter = ',', value_name = "MU,NU,P_MU,P_NU,Q_X")]
    pub params: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// CSV path (overrides output.csv; stdout when neither is set).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MinblockArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// JSON report path (overrides output.report).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn block(v: f64) -> CliResult<u64> {
    if v >= 1.0 && v.fract() == 0.0 && v < 9e15 {
        Ok(v as u64)
    } else {
        Err(CliError::config(format!(
            "--block: expected a positive integer, got {v}"
        )))
    }
}

fn base_config(path: &Option<PathBuf>, protocol: Protocol) -> CliResult<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => {
            let name = if protocol == Protocol::Decoy { "decoy" } else { "bbm92" };
            RunConfig::from_json(&format!("{{\"protocol\": \"{name}\"}}"))?
        }
    };
    cfg.protocol = protocol;
    Ok(cfg)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let jobs = cli.jobs;
    match cli.cmd {
        Cmd::Bound(a) => {
            let req = BoundRequest {
                kind: a.kind,
                direction: match a.direction {
                    DirArg::Lower => Direction::Lower,
                    DirArg::Upper => Direction::Upper,
                },
                n: a.n,
                count: a.count,
                population: a.population,
                eps: a.eps,
                p_th: a.p_th,
                all: a.all,
            };
            commands::bound(&req, &env_precision()?, out)
        }
        Cmd::Threshold(a) => {
            let kinds: Vec<SamplingBoundKind> = if a.kind.is_empty() {
                vec![
                    SamplingBoundKind::RelaxedChernoff,
                    SamplingBoundKind::ClopperPearsonHG,
                    SamplingBoundKind::Serfling,
                    SamplingBoundKind::EkertCombined,
                ]
            } else {
                a.kind.iter().map(|k| parse_sampling(k)).collect::<CliResult<_>>()?
            };
            let rows = commands::threshold_rows(
                a.population,
                a.n,
                a.eps,
                &a.p_th,
                &kinds,
                a.ekert.into(),
                &env_precision()?,
            )?;
            write_table(out, &THRESHOLD_COLUMNS, &rows).map_err(|e| CliError::Io(e.to_string()))
        }
        Cmd::Keyrate(KeyrateCmd::Bbm92(a)) => {
            let cfg = base_config(&a.common.config, Protocol::Bbm92)?;
            let kind = parse_sampling(&a.common.family)?;
            let rec = commands::keyrate_bbm92(&cfg, block(a.common.block)?, kind, a.n)?;
            write_table(out, &BBM92_COLUMNS, &sweep_rows(&BBM92_COLUMNS, &[rec]))
                .map_err(|e| CliError::Io(e.to_string()))
        }
        Cmd::Keyrate(KeyrateCmd::Decoy(a)) => {
            let cfg = base_config(&a.common.config, Protocol::Decoy)?;
            let fam = (parse_sampling(&a.common.family)?, Some(parse_bernoulli(&a.bernoulli)?));
            let params = match a.params.as_deref() {
                None => None,
                Some(&[mu, nu, p_mu, p_nu, q_x]) => Some(DecoyParams {
                    mu,
                    nu,
                    p_mu,
                    p_nu,
                    q_x,
                }),
                Some(p) => {
                    return Err(CliError::config(format!(
                        "--params: expected 5 values, got {}",
                        p.len()
                    )))
                }
            };
            let big_n = block(a.common.block)?;
            if big_n < 1000 && params.is_none() {
                return Err(CliError::config("--block: decoy optimization needs N >= 1000"));
            }
            let rec = commands::keyrate_decoy(&cfg, big_n, fam, params)?;
            write_table(out, &DECOY_COLUMNS, &sweep_rows(&DECOY_COLUMNS, &[rec]))
                .map_err(|e| CliError::Io(e.to_string()))
        }
        Cmd::Sweep(a) => {
            let cfg = RunConfig::load(&a.config)?;
            let csv = commands::resolve_output(a.output, cfg.output.csv.as_ref());
            commands::sweep(&cfg, csv.as_deref(), jobs, out)
        }
        Cmd::Minblock(a) => {
            let cfg = RunConfig::load(&a.config)?;
            let report = commands::resolve_output(a.report, cfg.output.report.as_ref());
            commands::minblock(&cfg, report.as_deref(), jobs, out)
        }
    }
}
