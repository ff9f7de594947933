//! End-to-end solve: enumerate witnesses, build the model, solve, read Γ
//! back and verify it against the data.

use std::time::Instant;

use serde::Serialize;

use crate::gdp::{verify, GdpInstance, VerificationReport};
use crate::ilp::{build_from, enumerate_all, lp_relaxation, model_stats, BuildOptions, IlpModel, Mode, ModelStats};
use crate::relcore::TupleRef;
use crate::solve::external::solve_external;
use crate::solve::{
    extract_interventions, snap, solve_ilp_with, solve_lp_with, LpStatus, MipStatus, SolverConfig,
};
use crate::Result;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Backend {
    #[default]
    Embedded,
    /// Shell command template with `{lp}` and `{sol}` placeholders.
    External(String),
}

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    pub mode: Mode,
    /// Solve the LP relaxation instead of the integer program.
    pub relax: bool,
    pub build: BuildOptions,
    pub solver: SolverConfig,
    pub backend: Backend,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Timings {
    pub enumerate_ms: f64,
    pub build_ms: f64,
    pub solve_ms: f64,
    pub verify_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    /// Budget exhausted; the reported solution is the incumbent.
    Budget,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub mode: Mode,
    pub relaxed: bool,
    pub status: Outcome,
    pub objective: Option<f64>,
    /// Empty for fractional LP solutions.
    pub gamma: Vec<TupleRef>,
    pub lp_integral: Option<bool>,
    pub node_count: Option<usize>,
    pub best_bound: Option<f64>,
    pub verification: Option<VerificationReport>,
    pub stats: ModelStats,
    pub witnesses: usize,
    pub timings: Timings,
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Builds the model for `inst` and reports its size and build time.
pub fn build_instance(inst: &GdpInstance, mode: Mode, opts: BuildOptions) -> Result<(IlpModel, usize, Timings)> {
    let t = Instant::now();
    let prov = enumerate_all(inst)?;
    let enumerate_ms = ms(t);
    let t = Instant::now();
    let model = build_from(inst, &prov, mode, opts);
    let witnesses = prov.iter().map(|p| p.witnesses.len()).sum();
    Ok((model, witnesses, Timings { enumerate_ms, build_ms: ms(t), ..Timings::default() }))
}

pub fn solve_instance(inst: &GdpInstance, opts: &SolveOptions) -> Result<SolveReport> {
    let (model, witnesses, mut timings) = build_instance(inst, opts.mode, opts.build)?;
    let stats = model_stats(&model);
    let tol = opts.solver.integrality_tol;
    let mut report = SolveReport {
        mode: opts.mode,
        relaxed: opts.relax,
        status: Outcome::Infeasible,
        objective: None,
        gamma: Vec::new(),
        lp_integral: None,
        node_count: None,
        best_bound: None,
        verification: None,
        stats,
        witnesses,
        timings,
    };

    let t = Instant::now();
    let x = match (&opts.backend, opts.relax) {
        (Backend::External(cmd), _) => {
            let target = if opts.relax { lp_relaxation(&model) } else { model.clone() };
            let dir = tempfile::tempdir().map_err(|e| crate::solve::SolveError::External(e.to_string()))?;
            let (sol, _) = solve_external(&target, cmd, dir.path())?;
            report.status = Outcome::Optimal;
            report.objective = Some(snap(sol.objective, tol));
            report.lp_integral = Some(sol.all_integral(tol));
            Some(sol.x)
        }
        (Backend::Embedded, true) => {
            let lp = solve_lp_with(&lp_relaxation(&model), &opts.solver);
            report.status = match lp.status {
                LpStatus::Optimal => Outcome::Optimal,
                LpStatus::Infeasible => Outcome::Infeasible,
                LpStatus::Unbounded => Outcome::Unbounded,
                LpStatus::NumericalFailure => Outcome::NumericalFailure,
            };
            if lp.status == LpStatus::Optimal {
                let integral = lp.all_integral(tol);
                report.lp_integral = Some(integral);
                report.objective = Some(if integral { snap(lp.objective, tol) } else { lp.objective });
                Some(lp.x)
            } else {
                None
            }
        }
        (Backend::Embedded, false) => {
            let r = solve_ilp_with(&model, &opts.solver);
            report.status = match r.status {
                MipStatus::Optimal => Outcome::Optimal,
                MipStatus::Infeasible => Outcome::Infeasible,
                MipStatus::Unbounded => Outcome::Unbounded,
                MipStatus::Budget => Outcome::Budget,
                MipStatus::NumericalFailure => Outcome::NumericalFailure,
            };
            report.objective = r.objective;
            report.node_count = Some(r.node_count);
            report.best_bound = Some(r.best_bound).filter(|b| b.is_finite());
            r.x
        }
    };
    timings.solve_ms = ms(t);

    let integral = x.as_ref().is_some_and(|x| x.iter().all(|v| (v - v.round()).abs() <= tol));
    if let (Some(x), true) = (x, integral) {
        let t = Instant::now();
        report.gamma = extract_interventions(&model, &x)?.into_iter().collect();
        report.verification = Some(verify(inst, &report.gamma)?);
        timings.verify_ms = ms(t);
    }
    report.timings = timings;
    Ok(report)
}
