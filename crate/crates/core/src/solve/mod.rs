//! LP and ILP solving over [`IlpModel`]s.
//!
//! Bound propagation runs first, then the model is split into independent
//! blocks; each block is solved by the embedded simplex (LP) or branch and
//! bound (ILP), and variables that appear in no row go straight to their
//! cheaper bound.

pub mod bnb;
pub mod components;
pub mod external;
pub mod lpfile;
pub mod presolve;
pub mod simplex;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::ilp::{lp_relaxation, IlpModel, Sense, VarId};
use crate::relcore::TupleRef;
use bnb::{branch_and_bound, BnbConfig, BnbStatus};
use components::{decompose, Component};
use presolve::{presolve, Presolved};
use simplex::{LpProblem, LpRow, SimplexOptions, SimplexStatus};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("X[{0}] = {1} is fractional; solve the integer program instead")]
    Fractional(String, f64),
    #[error("solution has status {0:?}, no assignment to read")]
    NoAssignment(String),
    #[error("{path}:{line}: {message}")]
    SolutionFile { path: String, line: usize, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("external solver: {0}")]
    External(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    pub feasibility_tol: f64,
    pub integrality_tol: f64,
    pub max_nodes: usize,
    #[serde(skip)]
    pub time_limit: Option<Duration>,
    /// Per-LP pivot limit; `None` scales with problem size.
    pub max_lp_iterations: Option<usize>,
    /// Solve independent blocks separately.
    pub decompose: bool,
    /// Fix variables pinned by zero-slack rows before solving.
    pub presolve: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feasibility_tol: 1e-7,
            integrality_tol: 1e-6,
            max_nodes: 100_000,
            time_limit: None,
            max_lp_iterations: None,
            decompose: true,
            presolve: true,
        }
    }
}

impl SolverConfig {
    fn simplex(&self) -> SimplexOptions {
        SimplexOptions {
            feasibility_tol: self.feasibility_tol,
            max_iterations: self.max_lp_iterations,
            ..SimplexOptions::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    /// Indexed like `IlpModel::variables`; empty unless optimal.
    pub x: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn value(&self, model: &IlpModel, id: &VarId) -> Option<f64> {
        model.var_index(id).and_then(|j| self.x.get(j).copied())
    }

    /// Every integer column within `tol` of an integer.
    pub fn is_integral(&self, model: &IlpModel, tol: f64) -> bool {
        self.status == LpStatus::Optimal
            && self.x.iter().zip(&model.variables).all(|(&v, var)| !var.integer || (v - v.round()).abs() <= tol)
    }

    /// As `is_integral`, but treating every column as integer.
    pub fn all_integral(&self, tol: f64) -> bool {
        self.status == LpStatus::Optimal && self.x.iter().all(|&v| (v - v.round()).abs() <= tol)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MipStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node or time budget ran out; `objective`/`x` hold the incumbent.
    Budget,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MipResult {
    pub status: MipStatus,
    pub objective: Option<f64>,
    #[serde(skip)]
    pub x: Option<Vec<f64>>,
    pub best_bound: f64,
    /// `1 + Σ (nodes per block − 1)`: a solve that never branches is 1.
    pub node_count: usize,
    pub root_lp_objective: f64,
    pub root_integral: bool,
    #[serde(skip)]
    pub bound_history: Vec<f64>,
}

fn block_problem(model: &IlpModel, comp: &Component, cost: &[f64]) -> (LpProblem, Vec<bool>) {
    let mut local = vec![usize::MAX; model.num_vars()];
    for (k, &j) in comp.vars.iter().enumerate() {
        local[j] = k;
    }
    let rows = comp
        .rows
        .iter()
        .map(|&i| {
            let c = &model.constraints[i];
            LpRow {
                terms: c.terms.iter().map(|&(j, a)| (local[j], a as f64)).collect(),
                sense: c.sense,
                rhs: c.rhs as f64,
            }
        })
        .collect();
    let n = comp.vars.len();
    let p = LpProblem {
        cost: comp.vars.iter().map(|&j| cost[j]).collect(),
        lower: vec![0.0; n],
        upper: vec![1.0; n],
        rows,
    };
    let integer = comp.vars.iter().map(|&j| model.variables[j].integer).collect();
    (p, integer)
}

/// Block-local recipe for completing a tuple assignment: round the tuple
/// columns, derive witness and view columns from their definitions, keep
/// the result if every row holds.
struct Completion {
    tuples: Vec<usize>,
    implied: Vec<(usize, Vec<Vec<usize>>)>,
}

impl Completion {
    fn for_block(model: &IlpModel, comp: &Component, fixed: &[Option<f64>]) -> Option<Completion> {
        let mut local = vec![usize::MAX; model.num_vars()];
        for (k, &j) in comp.vars.iter().enumerate() {
            local[j] = k;
        }
        let tuples: Vec<usize> = comp
            .vars
            .iter()
            .enumerate()
            .filter(|(_, &j)| matches!(model.variables[j].id, VarId::Tuple(_)))
            .map(|(k, _)| k)
            .collect();
        let mut implied = Vec::new();
        for imp in model.implied.iter().filter(|i| local[i.var] != usize::MAX) {
            // fixed literals drop out; a clause with a literal fixed to 1 holds
            let clauses: Vec<Vec<usize>> = imp
                .clauses
                .iter()
                .filter(|c| !c.iter().any(|&t| fixed[t] == Some(1.0)))
                .map(|c| c.iter().filter(|&&t| fixed[t].is_none()).map(|&t| local[t]).collect())
                .collect();
            if clauses.iter().flatten().any(|&t| t == usize::MAX) {
                return None;
            }
            implied.push((local[imp.var], clauses));
        }
        (tuples.len() + implied.len() == comp.vars.len()).then_some(Completion { tuples, implied })
    }

    fn complete(&self, p: &LpProblem, x: &[f64], tol: f64) -> Option<Vec<f64>> {
        let mut best: Option<(f64, Vec<f64>)> = None;
        // the last two cuts try deleting nothing and deleting everything
        for cut in [0.5, 1e-6, 1.0 - 1e-6, 2.0, -1.0] {
            let mut y = vec![0.0; x.len()];
            for &t in &self.tuples {
                y[t] = if x[t] >= cut { 1.0 } else { 0.0 };
            }
            for (v, clauses) in &self.implied {
                y[*v] = if clauses.iter().all(|c| c.iter().any(|&t| y[t] > 0.5)) { 1.0 } else { 0.0 };
            }
            if p.max_violation(&y) <= tol {
                let obj = p.objective(&y);
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    best = Some((obj, y));
                }
            }
        }
        best.map(|(_, y)| y)
    }
}

fn whole_problem(model: &IlpModel) -> Component {
    Component { vars: (0..model.num_vars()).collect(), rows: (0..model.constraints.len()).collect() }
}

struct Plan {
    pre: Presolved,
    blocks: Vec<Component>,
    free: Vec<usize>,
    infeasible: bool,
}

impl Plan {
    /// Starting point: fixed columns at their value, other free columns
    /// at their cheaper bound.
    fn initial_x(&self) -> Vec<f64> {
        let cost = self.pre.model.cost_vector();
        let mut x: Vec<f64> = self.pre.fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
        for &j in &self.free {
            if self.pre.fixed[j].is_none() {
                x[j] = free_value(cost[j]);
            }
        }
        x
    }
}

fn plan(model: &IlpModel, cfg: &SolverConfig) -> Plan {
    let pre = if cfg.presolve {
        presolve(model)
    } else {
        Presolved { model: model.clone(), fixed: vec![None; model.num_vars()], infeasible: false }
    };
    let reduced = &pre.model;
    let d = if cfg.decompose {
        decompose(reduced)
    } else {
        let mut d = decompose(reduced);
        if !d.components.is_empty() {
            let comp = whole_problem(reduced);
            let open: Vec<usize> = comp.vars.into_iter().filter(|&j| pre.fixed[j].is_none()).collect();
            d.components = vec![Component { vars: open, rows: comp.rows }];
            d.free.retain(|&j| pre.fixed[j].is_some());
        }
        d
    };
    let bad_const = d.constant_rows.iter().any(|&i| {
        let c = &reduced.constraints[i];
        match c.sense {
            Sense::Le => 0 > c.rhs,
            Sense::Ge => 0 < c.rhs,
            Sense::Eq => c.rhs != 0,
        }
    });
    let infeasible = pre.infeasible || bad_const;
    Plan { pre, blocks: d.components, free: d.free, infeasible }
}

fn free_value(c: f64) -> f64 {
    if c < 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn solve_lp(model: &IlpModel) -> LpSolution {
    solve_lp_with(model, &SolverConfig::default())
}

/// Solves the LP relaxation of `model` (integrality flags are ignored).
pub fn solve_lp_with(model: &IlpModel, cfg: &SolverConfig) -> LpSolution {
    let plan = plan(model, cfg);
    let fail = |status, iterations| LpSolution { status, objective: f64::NAN, x: Vec::new(), iterations };
    if plan.infeasible {
        return fail(LpStatus::Infeasible, 0);
    }
    let reduced = &plan.pre.model;
    let cost = reduced.cost_vector();
    let mut x = plan.initial_x();
    let opts = cfg.simplex();
    let mut iterations = 0;
    for comp in &plan.blocks {
        let (p, _) = block_problem(reduced, comp, &cost);
        let r = simplex::solve(&p, &opts);
        iterations += r.iterations;
        match r.status {
            SimplexStatus::Optimal => {
                for (k, &j) in comp.vars.iter().enumerate() {
                    x[j] = r.x[k];
                }
            }
            SimplexStatus::Infeasible => return fail(LpStatus::Infeasible, iterations),
            SimplexStatus::Unbounded => return fail(LpStatus::Unbounded, iterations),
            SimplexStatus::NumericalFailure => return fail(LpStatus::NumericalFailure, iterations),
        }
    }
    LpSolution { status: LpStatus::Optimal, objective: model.objective_value(&x), x, iterations }
}

pub fn solve_ilp(model: &IlpModel) -> MipResult {
    solve_ilp_with(model, &SolverConfig::default())
}

/// Exact optimum by branch and bound per block. The node budget applies
/// to each block; the time limit to the whole call.
pub fn solve_ilp_with(model: &IlpModel, cfg: &SolverConfig) -> MipResult {
    let plan = plan(model, cfg);
    let reduced = &plan.pre.model;
    let cost = reduced.cost_vector();
    let mut out = MipResult {
        status: MipStatus::Infeasible,
        objective: None,
        x: None,
        best_bound: f64::INFINITY,
        node_count: 1,
        root_lp_objective: f64::NAN,
        root_integral: false,
        bound_history: Vec::new(),
    };
    if plan.infeasible {
        return out;
    }
    let mut x = plan.initial_x();
    let fixed_part: f64 = reduced.offset as f64 + plan.free.iter().map(|&j| cost[j] * x[j]).sum::<f64>();
    let bcfg = BnbConfig {
        simplex: cfg.simplex(),
        integrality_tol: cfg.integrality_tol,
        max_nodes: cfg.max_nodes,
        deadline: cfg.time_limit.map(|d| Instant::now() + d),
    };

    let mut bound = fixed_part;
    let mut root = fixed_part;
    let mut incumbent = Some(fixed_part);
    let mut root_integral = true;
    let mut budget = false;
    let mut histories: Vec<Vec<f64>> = Vec::new();
    for comp in &plan.blocks {
        let (p, integer) = block_problem(reduced, comp, &cost);
        let completion = Completion::for_block(reduced, comp, &plan.pre.fixed);
        let heuristic = |x: &[f64]| completion.as_ref().and_then(|c| c.complete(&p, x, cfg.feasibility_tol));
        let r = branch_and_bound(&p, &integer, &bcfg, Some(&heuristic));
        out.node_count += r.nodes.saturating_sub(1);
        match r.status {
            BnbStatus::Optimal | BnbStatus::Budget => {}
            BnbStatus::Infeasible => return MipResult { status: MipStatus::Infeasible, ..out },
            BnbStatus::Unbounded => return MipResult { status: MipStatus::Unbounded, ..out },
            BnbStatus::NumericalFailure => return MipResult { status: MipStatus::NumericalFailure, ..out },
        }
        budget |= r.status == BnbStatus::Budget;
        bound += r.bound;
        root += r.root_objective;
        if let Some(rx) = &r.root_x {
            root_integral &= bnb::most_fractional(rx, &integer, cfg.integrality_tol).is_none();
        }
        incumbent = match (incumbent, r.objective) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        if let Some(bx) = &r.x {
            for (k, &j) in comp.vars.iter().enumerate() {
                x[j] = bx[k];
            }
        }
        histories.push(r.bound_history);
    }

    // Bound history of the combined solve: blocks are processed in order,
    // later blocks still at their root bound.
    let mut base: Vec<f64> = histories.iter().map(|h| h.first().copied().unwrap_or(0.0)).collect();
    let mut hist = Vec::new();
    for (b, h) in histories.iter().enumerate() {
        for &v in h {
            base[b] = v;
            hist.push(fixed_part + base.iter().sum::<f64>());
        }
    }

    out.best_bound = snap(bound, cfg.integrality_tol);
    out.root_lp_objective = root;
    out.root_integral = root_integral;
    out.bound_history = hist;
    out.objective = incumbent.map(|v| snap(v, cfg.integrality_tol));
    out.x = incumbent.map(|_| x);
    out.status = if budget { MipStatus::Budget } else { MipStatus::Optimal };
    out
}

/// Reports values within `tol` of an integer as that integer.
pub fn snap(v: f64, tol: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= tol {
        r
    } else {
        v
    }
}

/// Γ = { t : X[t] ≥ 1 − 1e-6 }.
pub fn extract_interventions(model: &IlpModel, x: &[f64]) -> Result<BTreeSet<TupleRef>, SolveError> {
    let mut gamma = BTreeSet::new();
    for (j, var) in model.variables.iter().enumerate() {
        if let VarId::Tuple(t) = var.id {
            let v = x[j];
            if v >= 1.0 - 1e-6 {
                gamma.insert(model.tuple_refs[t.index()].clone());
            } else if v > 1e-6 {
                return Err(SolveError::Fractional(model.tuple_refs[t.index()].to_string(), v));
            }
        }
    }
    Ok(gamma)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralityReport {
    pub lp_status: LpStatus,
    pub mip_status: MipStatus,
    pub lp_objective: f64,
    pub ilp_objective: Option<f64>,
    pub gap: Option<f64>,
    /// The optimal LP vertex found is integral.
    pub lp_integral: bool,
    /// LP and ILP optima agree within 1e-6.
    pub tight: bool,
}

pub fn integrality_report(model: &IlpModel) -> IntegralityReport {
    integrality_report_with(model, &SolverConfig::default())
}

pub fn integrality_report_with(model: &IlpModel, cfg: &SolverConfig) -> IntegralityReport {
    let lp = solve_lp_with(&lp_relaxation(model), cfg);
    let mip = solve_ilp_with(model, cfg);
    let lp_integral = lp.all_integral(cfg.integrality_tol);
    let lp_obj = if lp_integral { snap(lp.objective, cfg.integrality_tol) } else { lp.objective };
    let gap = match (mip.status, mip.objective) {
        (MipStatus::Optimal, Some(o)) if lp.status == LpStatus::Optimal => Some(o - lp.objective),
        (MipStatus::Infeasible, _) if lp.status == LpStatus::Infeasible => Some(0.0),
        _ => None,
    };
    IntegralityReport {
        lp_status: lp.status,
        mip_status: mip.status,
        lp_objective: lp_obj,
        ilp_objective: mip.objective,
        tight: gap.is_some_and(|g| g.abs() <= 1e-6),
        gap: gap.map(|g| if g.abs() <= 1e-9 { 0.0 } else { g }),
        lp_integral,
    }
}
