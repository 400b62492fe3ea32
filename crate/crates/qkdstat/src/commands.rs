//! Subcommand implementations. Each writes its table to `out` and returns
//! a [`CliError`] carrying the exit code on failure.

use crate::config::{parse_bernoulli, parse_sampling, Family, Protocol, RunConfig};
use crate::error::{CliError, CliResult};
use crate::exec::{pool, RayonExecutor};
use crate::output::*;
use qkdstat_core::bernoulli::{bernoulli_interval, BernoulliBoundKind};
use qkdstat_core::optimizer::{
    min_block_bbm92, min_block_decoy, optimize_bbm92, optimize_decoy, DecoyParams, MinBlockReport, Sequential,
};
use qkdstat_core::protocols::{evaluate_decoy, key_length_bbm92, BBM92Inputs, KeyResult};
use qkdstat_core::sampling::{confidence_upper, ekert_threshold, threshold, EkertDirection, SamplingBoundKind};
use qkdstat_core::{Direction, Error, PrecisionConfig};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

fn io_out(e: std::io::Error) -> CliError {
    CliError::Io(format!("output: {e}"))
}

// ---------------------------------------------------------------- bound

#[derive(Debug, Clone)]
pub struct BoundRequest {
    pub kind: Option<String>,
    pub direction: Direction,
    pub n: u64,
    pub count: Option<f64>,
    pub population: Option<u64>,
    pub eps: f64,
    pub p_th: Option<f64>,
    pub all: bool,
}

pub const BOUND_COLUMNS: [&str; 10] = [
    "kind",
    "mode",
    "direction",
    "n",
    "count",
    "population",
    "eps",
    "p_th",
    "value",
    "status",
];

fn dir_name(d: Direction) -> &'static str {
    match d {
        Direction::Lower => "lower",
        Direction::Upper => "upper",
    }
}

fn opt_str<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Evaluates a bound (Bernoulli interval, sampling confidence bound or
/// threshold, depending on the flags given) for one or all families.
pub fn bound(req: &BoundRequest, prec: &PrecisionConfig, out: &mut dyn Write) -> CliResult<()> {
    if req.kind.is_none() && !req.all {
        return Err(CliError::config("bound: give --kind or --all"));
    }
    let mut rows = Vec::new();
    let base = |kind: &str, mode: &str, dir: &str| {
        vec![
            kind.to_string(),
            mode.to_string(),
            dir.to_string(),
            req.n.to_string(),
            opt_str(req.count.map(fmt_f64)),
            opt_str(req.population),
            fmt_f64(req.eps),
            opt_str(req.p_th.map(fmt_f64)),
        ]
    };
    match req.population {
        Some(pop) => {
            let kinds: Vec<SamplingBoundKind> = match (&req.kind, req.all) {
                (_, true) => SamplingBoundKind::ALL.to_vec(),
                (Some(k), false) => vec![parse_sampling(k)?],
                (None, false) => unreachable!(),
            };
            if let Some(p) = req.p_th {
                for k in kinds {
                    let (v, status) = match threshold(k, pop, req.n, req.eps, p, prec) {
                        Ok(v) if v > 1.0 => (v, "sentinel"),
                        Ok(v) => (v, "ok"),
                        Err(Error::Infeasible(_)) => (f64::INFINITY, "infeasible"),
                        Err(e) => return Err(e.into()),
                    };
                    let mut r = base(k.name(), "threshold", "upper");
                    r.extend([fmt_f64(v), status.into()]);
                    rows.push(r);
                }
            } else {
                let count = req
                    .count
                    .ok_or_else(|| CliError::config("bound: give --count or --p-th"))?;
                if req.direction == Direction::Lower {
                    return Err(CliError::config(
                        "bound: sampling confidence bounds are upper bounds only",
                    ));
                }
                let kinds: Vec<_> = kinds
                    .into_iter()
                    .filter(|k| k.has_confidence_bound() || !req.all)
                    .collect();
                let p_hat = count / req.n as f64;
                for k in kinds {
                    let v = confidence_upper(k, pop, req.n, req.eps, p_hat, prec)?;
                    let status = if v > 1.0 { "sentinel" } else { "ok" };
                    let mut r = base(k.name(), "confidence", "upper");
                    r.extend([fmt_f64(v), status.into()]);
                    rows.push(r);
                }
            }
        }
        None => {
            let count = req
                .count
                .ok_or_else(|| CliError::config("bound: --count is required"))?;
            let kinds: Vec<BernoulliBoundKind> = match (&req.kind, req.all) {
                (_, true) => BernoulliBoundKind::ALL.to_vec(),
                (Some(k), false) => vec![parse_bernoulli(k)?],
                (None, false) => unreachable!(),
            };
            let total = req.n as f64;
            for k in kinds {
                let v = bernoulli_interval(k, req.direction, req.eps, count, total, prec)?;
                let status = if (0.0..=total).contains(&v) {
                    "ok"
                } else if k == BernoulliBoundKind::RelaxedChernoff {
                    "sentinel"
                } else {
                    "unclamped"
                };
                let mut r = base(k.name(), "bernoulli", dir_name(req.direction));
                r.extend([fmt_f64(v), status.into()]);
                rows.push(r);
            }
        }
    }
    write_table(out, &BOUND_COLUMNS, &rows).map_err(io_out)
}

// ---------------------------------------------------------------- threshold

pub fn threshold_rows(
    population: u64,
    n: u64,
    eps: f64,
    p_th: &[f64],
    kinds: &[SamplingBoundKind],
    dir: EkertDirection,
    prec: &PrecisionConfig,
) -> CliResult<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for &p in p_th {
        for &k in kinds {
            let q = match k {
                SamplingBoundKind::EkertCombined => ekert_threshold(population, n, eps, p, dir),
                _ => threshold(k, population, n, eps, p, prec),
            };
            let q = match q {
                Ok(q) => q,
                Err(Error::Infeasible(_)) => f64::INFINITY,
                Err(e) => return Err(e.into()),
            };
            rows.push(vec![
                population.to_string(),
                n.to_string(),
                fmt_f64(eps),
                fmt_f64(p),
                k.name().into(),
                fmt_f64(q),
            ]);
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------- keyrate

fn bbm92_record(big_n: u64, kind: SamplingBoundKind, n: u64, r: &KeyResult) -> SweepRecord {
    SweepRecord {
        big_n,
        family: kind.name(),
        bernoulli_family: None,
        n_opt: Some(n),
        mu: None,
        nu: None,
        p_mu: None,
        p_nu: None,
        q_x: None,
        l: r.l,
        rate: r.rate,
        eps_sec: r.eps_sec,
        feasible: r.feasible,
    }
}

fn decoy_record(big_n: u64, fam: Family, p: &DecoyParams, r: &KeyResult) -> SweepRecord {
    SweepRecord {
        big_n,
        family: fam.0.name(),
        bernoulli_family: fam.1.map(|b| b.name()),
        n_opt: None,
        mu: Some(p.mu),
        nu: Some(p.nu),
        p_mu: Some(p.p_mu),
        p_nu: Some(p.p_nu),
        q_x: Some(p.q_x),
        l: r.l,
        rate: r.rate,
        eps_sec: r.eps_sec,
        feasible: r.feasible,
    }
}

/// BBM92 key length at a given n, or optimized over n when `n` is None.
pub fn keyrate_bbm92(cfg: &RunConfig, big_n: u64, kind: SamplingBoundKind, n: Option<u64>) -> CliResult<SweepRecord> {
    let fixed = cfg.bbm92_inputs(big_n, kind)?;
    let (n, r) = match n {
        Some(n) => {
            let inp = BBM92Inputs { n, ..fixed };
            let r = match key_length_bbm92(&inp) {
                Ok(r) => r,
                Err(Error::SlopeCondition { .. }) => KeyResult {
                    l: 0,
                    rate: 0.0,
                    eps_sec: inp.eps_sec(),
                    eps_cor: inp.eps_cor,
                    q_or_phi_threshold: f64::NAN,
                    feasible: false,
                },
                Err(e) => return Err(e.into()),
            };
            (n, r)
        }
        None => optimize_bbm92(big_n, &fixed, &RayonExecutor)?,
    };
    Ok(bbm92_record(big_n, kind, n, &r))
}

/// Decoy key length at given tunables, or optimized when `params` is None.
pub fn keyrate_decoy(cfg: &RunConfig, big_n: u64, fam: Family, params: Option<DecoyParams>) -> CliResult<SweepRecord> {
    let b = fam
        .1
        .ok_or_else(|| CliError::config("decoy needs a bernoulli family"))?;
    let fixed = cfg.decoy_inputs(big_n, fam.0, b)?;
    let model = cfg.channel.model()?;
    let (p, r) = match params {
        Some(p) => {
            let inp = p.apply(&fixed, big_n);
            inp.validate()?;
            (p, evaluate_decoy(&inp, &model)?)
        }
        None => optimize_decoy(big_n, &model, &fixed, &cfg.search, &RayonExecutor)?,
    };
    Ok(decoy_record(big_n, fam, &p, &r))
}

// ---------------------------------------------------------------- sweep

/// Evaluates every (N, family) point of the configuration on a pool of
/// `jobs` workers; records come back ordered by N, then family.
pub fn sweep_records(cfg: &RunConfig, jobs: usize) -> CliResult<Vec<SweepRecord>> {
    let families = cfg.families()?;
    let points: Vec<(u64, Family)> = cfg
        .block_sizes()?
        .into_iter()
        .flat_map(|n| families.iter().map(move |f| (n, *f)))
        .collect();
    let model = cfg.channel.model()?;
    let eval = |&(big_n, fam): &(u64, Family)| -> CliResult<SweepRecord> {
        match cfg.protocol {
            Protocol::Bbm92 => {
                let fixed = cfg.bbm92_inputs(big_n, fam.0)?;
                let (n, r) = optimize_bbm92(big_n, &fixed, &Sequential)?;
                Ok(bbm92_record(big_n, fam.0, n, &r))
            }
            Protocol::Decoy => {
                let b = fam
                    .1
                    .ok_or_else(|| CliError::config("decoy needs a bernoulli family"))?;
                let fixed = cfg.decoy_inputs(big_n, fam.0, b)?;
                let (p, r) = optimize_decoy(big_n, &model, &fixed, &cfg.search, &Sequential)?;
                Ok(decoy_record(big_n, fam, &p, &r))
            }
            Protocol::Threshold => unreachable!("threshold sweeps have their own table"),
        }
    };
    pool(jobs)?.install(|| points.par_iter().map(eval).collect())
}

/// Runs a sweep and writes the CSV (to `csv` or stdout) plus, for files,
/// the metadata companion.
pub fn sweep(cfg: &RunConfig, csv: Option<&Path>, jobs: usize, out: &mut dyn Write) -> CliResult<()> {
    let (columns, rows): (Vec<&str>, Vec<Vec<String>>) = match cfg.protocol {
        Protocol::Threshold => {
            let t = cfg.threshold.as_ref().expect("validated");
            let kinds: Vec<_> = cfg.families()?.into_iter().map(|f| f.0).collect();
            let rows = threshold_rows(
                t.population.0,
                t.n.0,
                t.eps,
                &cfg.p_th_grid()?,
                &kinds,
                cfg.ekert_direction,
                &cfg.precision()?,
            )?;
            (THRESHOLD_COLUMNS.to_vec(), rows)
        }
        Protocol::Bbm92 => (
            BBM92_COLUMNS.to_vec(),
            sweep_rows(&BBM92_COLUMNS, &sweep_records(cfg, jobs)?),
        ),
        Protocol::Decoy => (
            DECOY_COLUMNS.to_vec(),
            sweep_rows(&DECOY_COLUMNS, &sweep_records(cfg, jobs)?),
        ),
    };
    match csv {
        Some(path) => {
            let mut buf = Vec::new();
            write_table(&mut buf, &columns, &rows).map_err(io_out)?;
            write_file(path, &buf)?;
            let meta = Metadata {
                software: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                config_sha256: cfg.hash(),
                seed: cfg.seed,
                protocol: protocol_name(cfg.protocol),
                rows: rows.len(),
            };
            write_file(&meta_path(path), &to_json_pretty(&meta))?;
            writeln!(out, "wrote {} rows to {}", rows.len(), path.display()).map_err(io_out)
        }
        None => write_table(out, &columns, &rows).map_err(io_out),
    }
}

fn protocol_name(p: Protocol) -> &'static str {
    match p {
        Protocol::Bbm92 => "bbm92",
        Protocol::Decoy => "decoy",
        Protocol::Threshold => "threshold",
    }
}

// ---------------------------------------------------------------- minblock

#[derive(Debug, Clone, Serialize)]
pub struct FamilyMinBlock {
    pub family: &'static str,
    pub bernoulli_family: Option<&'static str>,
    pub n_min: Option<u64>,
    pub non_monotone: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Reduction {
    pub family: String,
    pub baseline: String,
    /// 100·(1 − N_min(family)/N_min(baseline)).
    pub reduction_percent: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinBlockSummary {
    pub software: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub protocol: &'static str,
    pub cap: u64,
    pub families: Vec<FamilyMinBlock>,
    pub reductions: Vec<Reduction>,
}

fn label(f: &FamilyMinBlock) -> String {
    match f.bernoulli_family {
        Some(b) => format!("{}+{}", f.family, b),
        None => f.family.to_string(),
    }
}

pub fn minblock_summary(cfg: &RunConfig, jobs: usize) -> CliResult<MinBlockSummary> {
    if cfg.protocol == Protocol::Threshold {
        return Err(CliError::config("protocol: minblock needs bbm92 or decoy"));
    }
    let families = cfg.families()?;
    let model = cfg.channel.model()?;
    let opts = cfg.minblock;
    let run = |fam: &Family| -> CliResult<FamilyMinBlock> {
        let rep: MinBlockReport = match cfg.protocol {
            Protocol::Bbm92 => min_block_bbm92(&cfg.bbm92_inputs(1000, fam.0)?, &opts, &RayonExecutor)?,
            _ => {
                let b = fam
                    .1
                    .ok_or_else(|| CliError::config("decoy needs a bernoulli family"))?;
                min_block_decoy(
                    &cfg.decoy_inputs(1000, fam.0, b)?,
                    &model,
                    &cfg.search,
                    &opts,
                    &RayonExecutor,
                )?
            }
        };
        Ok(FamilyMinBlock {
            family: fam.0.name(),
            bernoulli_family: fam.1.map(|b| b.name()),
            n_min: rep.n_min,
            non_monotone: rep.non_monotone,
            evaluations: rep.trace.len(),
        })
    };
    let results: Vec<FamilyMinBlock> =
        pool(jobs)?.install(|| families.par_iter().map(run).collect::<CliResult<_>>())?;
    let mut reductions = Vec::new();
    for a in &results {
        for b in &results {
            if let (Some(na), Some(nb)) = (a.n_min, b.n_min) {
                if label(a) != label(b) {
                    reductions.push(Reduction {
                        family: label(a),
                        baseline: label(b),
                        reduction_percent: 100.0 * (1.0 - na as f64 / nb as f64),
                    });
                }
            }
        }
    }
    Ok(MinBlockSummary {
        software: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: cfg.hash(),
        protocol: protocol_name(cfg.protocol),
        cap: opts.cap,
        families: results,
        reductions,
    })
}

pub fn minblock(cfg: &RunConfig, report: Option<&Path>, jobs: usize, out: &mut dyn Write) -> CliResult<()> {
    let s = minblock_summary(cfg, jobs)?;
    let mut text = String::new();
    for f in &s.families {
        match f.n_min {
            Some(n) => text.push_str(&format!("{:<32} N_min = {n}\n", label(f))),
            None => text.push_str(&format!("{:<32} infeasible below {:e}\n", label(f), s.cap as f64)),
        }
    }
    for r in &s.reductions {
        if r.reduction_percent > 0.0 {
            text.push_str(&format!(
                "{} vs {}: {:.1}% smaller\n",
                r.family, r.baseline, r.reduction_percent
            ));
        }
    }
    out.write_all(text.as_bytes()).map_err(io_out)?;
    if let Some(p) = report {
        write_file(p, &to_json_pretty(&s))?;
    }
    Ok(())
}

pub fn resolve_output(flag: Option<PathBuf>, cfg: Option<&PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| cfg.cloned())
}
