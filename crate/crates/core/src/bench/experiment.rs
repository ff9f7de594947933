//! Experiment runner: generate instances over a size ladder, solve the LP
//! relaxation and the ILP per mode, and record one CSV row per run plus a
//! JSON summary of per-bucket medians.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::gen::{gen_random, GenProfile};
use crate::gdp::{make_variant, Variant};
use crate::ilp::{build_from, enumerate_all, lp_relaxation, model_stats, BuildOptions, Mode};
use crate::par::{self, Execution};
use crate::query::{parse_query, Query};
use crate::relcore::Semantics;
use crate::solve::{snap, solve_ilp_with, solve_lp_with, LpStatus, MipStatus, SolverConfig};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub start: usize,
    /// Sizes are `start · 2^i` for `i` in `0..steps`.
    pub steps: u32,
}

impl Ladder {
    pub fn sizes(&self) -> Vec<usize> {
        (0..self.steps).map(|i| self.start << i).collect()
    }
}

fn default_modes() -> Vec<Mode> {
    vec![Mode::Naive, Mode::Smoothed]
}

fn one() -> usize {
    1
}

fn default_domains() -> Vec<u64> {
    vec![1000]
}

fn default_bag() -> u64 {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub name: String,
    pub variant: Variant,
    /// Query text.
    pub query: String,
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub semantics: Semantics,
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub ladder: Option<Ladder>,
    #[serde(default = "default_domains")]
    pub max_domains: Vec<u64>,
    #[serde(default = "default_bag")]
    pub max_bag: u64,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    /// ADP-SS k; defaults to ceil(10% of the view).
    #[serde(default)]
    pub k: Option<usize>,
}

impl Cell {
    pub fn all_sizes(&self) -> Vec<usize> {
        let mut s = self.sizes.clone();
        if let Some(l) = &self.ladder {
            s.extend(l.sizes());
        }
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub cells: Vec<Cell>,
    #[serde(default)]
    pub execution: Execution,
    #[serde(default)]
    pub max_nodes: Option<usize>,
    #[serde(default)]
    pub time_limit_s: Option<f64>,
    /// Solve each model this many times and keep the fastest time.
    #[serde(default = "one")]
    pub timing_repeats: usize,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })?;
        Ok(serde_json::from_str(&text)?)
    }

    fn solver(&self) -> SolverConfig {
        let mut c = SolverConfig::default();
        if let Some(n) = self.max_nodes {
            c.max_nodes = n;
        }
        c.time_limit = self.time_limit_s.map(Duration::from_secs_f64);
        c
    }
}

/// One CSV row. Column order is the field order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub cell: String,
    pub instance_id: String,
    pub variant: Variant,
    pub mode: Mode,
    pub semantics: Semantics,
    pub n_tuples: usize,
    pub max_domain: u64,
    pub repetition: usize,
    pub seed: u64,
    pub db_tuples: usize,
    pub n_witnesses: usize,
    pub n_variables: usize,
    pub n_constraints: usize,
    pub lp_objective: Option<f64>,
    pub ilp_objective: Option<f64>,
    pub gap: Option<f64>,
    pub lp_integral: Option<bool>,
    pub node_count: Option<usize>,
    pub root_integral: Option<bool>,
    pub enumerate_ms: f64,
    pub build_ms: f64,
    pub lp_ms: f64,
    pub ilp_ms: f64,
    pub error: Option<String>,
}

/// Stable 64-bit mix of the run coordinates.
fn mix(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9e3779b97f4a7c15;
    for &p in parts {
        h ^= p.wrapping_add(0x9e3779b97f4a7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = h.wrapping_mul(0xbf58476d1ce4e5b9);
        h ^= h >> 31;
    }
    h
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Last result of `repeats` runs and the fastest wall time.
fn fastest<T>(repeats: usize, mut f: impl FnMut() -> T) -> (T, f64) {
    let mut best = f64::INFINITY;
    let mut out = None;
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        out = Some(f());
        best = best.min(ms(t));
    }
    (out.expect("at least one run"), best)
}

struct Job<'a> {
    cell: &'a Cell,
    query: &'a Query,
    n_tuples: usize,
    max_domain: u64,
    repetition: usize,
}

fn blank(job: &Job, mode: Mode, seed: u64) -> RunRecord {
    RunRecord {
        cell: job.cell.name.clone(),
        instance_id: format!("{}-n{}-d{}-r{}", job.cell.name, job.n_tuples, job.max_domain, job.repetition),
        variant: job.cell.variant,
        mode,
        semantics: job.cell.semantics,
        n_tuples: job.n_tuples,
        max_domain: job.max_domain,
        repetition: job.repetition,
        seed,
        db_tuples: 0,
        n_witnesses: 0,
        n_variables: 0,
        n_constraints: 0,
        lp_objective: None,
        ilp_objective: None,
        gap: None,
        lp_integral: None,
        node_count: None,
        root_integral: None,
        enumerate_ms: 0.0,
        build_ms: 0.0,
        lp_ms: 0.0,
        ilp_ms: 0.0,
        error: None,
    }
}

fn run_job(job: &Job, solver: &SolverConfig, repeats: usize) -> Vec<RunRecord> {
    let seed = mix(&[job.cell.seed, job.n_tuples as u64, job.max_domain, job.repetition as u64]);
    let fail = |msg: String| -> Vec<RunRecord> {
        job.cell.modes.iter().map(|&m| RunRecord { error: Some(msg.clone()), ..blank(job, m, seed) }).collect()
    };
    let profile = GenProfile {
        query: job.query.clone(),
        n_tuples: job.n_tuples,
        max_domain: job.max_domain,
        semantics: job.cell.semantics,
        max_bag: job.cell.max_bag,
        seed,
    };
    let db = match gen_random(&profile) {
        Ok(db) => db,
        Err(e) => return fail(e.to_string()),
    };
    let inst = match make_variant(&db, job.query, job.cell.variant, None, job.cell.k) {
        Ok(i) => i,
        Err(e) => return fail(e.to_string()),
    };
    let t = Instant::now();
    let prov = match enumerate_all(&inst) {
        Ok(p) => p,
        Err(e) => return fail(e.to_string()),
    };
    let enumerate_ms = ms(t);
    let n_witnesses = prov.iter().map(|p| p.witnesses.len()).sum();
    let tol = solver.integrality_tol;

    job.cell
        .modes
        .iter()
        .map(|&mode| {
            let mut r = blank(job, mode, seed);
            r.db_tuples = db.tuple_count();
            r.n_witnesses = n_witnesses;
            r.enumerate_ms = enumerate_ms;
            let t = Instant::now();
            let model = build_from(&inst, &prov, mode, BuildOptions::default());
            r.build_ms = ms(t);
            let stats = model_stats(&model);
            r.n_variables = stats.variables;
            r.n_constraints = stats.constraints;

            let relaxed = lp_relaxation(&model);
            let (lp, lp_ms) = fastest(repeats, || solve_lp_with(&relaxed, solver));
            r.lp_ms = lp_ms;
            if lp.status == LpStatus::Optimal {
                let integral = lp.all_integral(tol);
                r.lp_integral = Some(integral);
                r.lp_objective = Some(if integral { snap(lp.objective, tol) } else { lp.objective });
            }

            let (mip, ilp_ms) = fastest(repeats, || solve_ilp_with(&model, solver));
            r.ilp_ms = ilp_ms;
            r.node_count = Some(mip.node_count);
            match mip.status {
                MipStatus::Optimal => {
                    r.ilp_objective = mip.objective;
                    r.root_integral = Some(mip.root_integral);
                }
                other => r.error = Some(format!("ilp status {other:?}")),
            }
            if let (Some(i), Some(l)) = (r.ilp_objective, r.lp_objective) {
                let g = i - l;
                r.gap = Some(if g.abs() <= 1e-9 { 0.0 } else { g });
            }
            r
        })
        .collect()
}

/// Runs every cell. Rows come back in (cell, size, domain, repetition,
/// mode) order regardless of execution mode.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, ExperimentError> {
    let queries: Vec<Query> = cfg
        .cells
        .iter()
        .map(|c| parse_query(&c.query).map_err(|e| ExperimentError::Config(format!("cell {}: {e}", c.name))))
        .collect::<Result<_, _>>()?;
    let mut jobs = Vec::new();
    for (cell, query) in cfg.cells.iter().zip(&queries) {
        if cell.all_sizes().is_empty() {
            return Err(ExperimentError::Config(format!("cell {} has no sizes", cell.name)));
        }
        for n_tuples in cell.all_sizes() {
            for &max_domain in &cell.max_domains {
                for repetition in 0..cell.repetitions {
                    jobs.push(Job { cell, query, n_tuples, max_domain, repetition });
                }
            }
        }
    }
    let solver = cfg.solver();
    Ok(par::map_with(cfg.execution, &jobs, |j| run_job(j, &solver, cfg.timing_repeats)).into_iter().flatten().collect())
}

pub fn write_csv(records: &[RunRecord], path: &Path) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>, ExperimentError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bucket {
    pub cell: String,
    pub variant: Variant,
    pub mode: Mode,
    pub n_tuples: usize,
    pub max_domain: u64,
    pub runs: usize,
    pub failures: usize,
    pub median_witnesses: Option<f64>,
    pub median_lp_ms: Option<f64>,
    pub median_ilp_ms: Option<f64>,
    pub median_build_ms: Option<f64>,
    pub median_gap: Option<f64>,
    pub max_gap: Option<f64>,
    /// Fraction of solved runs that never branched.
    pub root_node_fraction: Option<f64>,
    pub lp_integral_fraction: Option<f64>,
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

fn fraction(flags: impl Iterator<Item = bool>) -> Option<f64> {
    let (mut yes, mut all) = (0usize, 0usize);
    for f in flags {
        all += 1;
        yes += usize::from(f);
    }
    (all > 0).then(|| yes as f64 / all as f64)
}

/// Per (cell, mode, size, domain) medians over successful runs.
pub fn summarize(records: &[RunRecord]) -> Vec<Bucket> {
    let mut groups: BTreeMap<(String, usize, u64, Mode), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.cell.clone(), r.n_tuples, r.max_domain, r.mode)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((cell, n_tuples, max_domain, mode), rs)| {
            let ok: Vec<&RunRecord> = rs.iter().copied().filter(|r| r.error.is_none()).collect();
            let col = |f: fn(&RunRecord) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
            let gaps = col(|r| r.gap);
            Bucket {
                cell,
                variant: rs[0].variant,
                mode,
                n_tuples,
                max_domain,
                runs: rs.len(),
                failures: rs.len() - ok.len(),
                median_witnesses: median(&col(|r| Some(r.n_witnesses as f64))),
                median_lp_ms: median(&col(|r| Some(r.lp_ms))),
                median_ilp_ms: median(&col(|r| Some(r.ilp_ms))),
                median_build_ms: median(&col(|r| Some(r.build_ms))),
                median_gap: median(&gaps),
                max_gap: gaps.iter().copied().reduce(f64::max),
                root_node_fraction: fraction(ok.iter().filter_map(|r| r.node_count).map(|n| n == 1)),
                lp_integral_fraction: fraction(ok.iter().filter_map(|r| r.lp_integral)),
            }
        })
        .collect()
}

pub fn write_summary(buckets: &[Bucket], path: &Path) -> Result<(), ExperimentError> {
    let text = serde_json::to_string_pretty(buckets)?;
    std::fs::write(path, text + "\n").map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })
}
