//! LP-based branch and bound over a single block.
//!
//! Best-bound node selection (ties: deeper first, then creation order),
//! most-fractional branching (ties: lowest index). When every cost is an
//! integer on an integer column, nodes whose bound rounds up to the
//! incumbent are pruned.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::simplex::{solve as simplex, LpProblem, SimplexOptions, SimplexStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BnbStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node or time budget exhausted; carries the incumbent if any.
    Budget,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BnbResult {
    pub status: BnbStatus,
    pub x: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Proven lower bound on the optimum.
    pub bound: f64,
    /// LP relaxations solved.
    pub nodes: usize,
    /// Global lower bound after each node.
    pub bound_history: Vec<f64>,
    pub root_objective: f64,
    pub root_x: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug)]
pub struct BnbConfig {
    pub simplex: SimplexOptions,
    pub integrality_tol: f64,
    pub max_nodes: usize,
    pub deadline: Option<Instant>,
}

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    bound: f64,
    depth: usize,
    id: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    /// Max-heap order: the node to explore next compares greatest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

/// Index of the most fractional integer column, if any exceeds `tol`.
pub fn most_fractional(x: &[f64], integer: &[bool], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &v) in x.iter().enumerate() {
        if !integer[j] {
            continue;
        }
        let frac = (v - v.floor()).min(v.ceil() - v);
        if frac > tol && best.is_none_or(|(_, f)| frac > f + 1e-12) {
            best = Some((j, frac));
        }
    }
    best.map(|(j, _)| j)
}

/// Global lower bound: the best open node, capped by the incumbent.
fn record_bound(res: &mut BnbResult, heap: &BinaryHeap<Node>) {
    let open = heap.peek().map_or(f64::INFINITY, |n| n.bound);
    let g = open.min(res.objective.unwrap_or(f64::INFINITY));
    if g.is_finite() {
        res.bound = res.bound.max(g);
        res.bound_history.push(res.bound);
    }
}

/// Tries to turn a fractional node solution into a feasible integral one.
pub type Heuristic<'a> = &'a dyn Fn(&[f64]) -> Option<Vec<f64>>;

pub fn branch_and_bound(p: &LpProblem, integer: &[bool], cfg: &BnbConfig, heuristic: Option<Heuristic>) -> BnbResult {
    let integral_costs = p
        .cost
        .iter()
        .zip(integer)
        .all(|(&c, &int)| c == 0.0 || (int && c.fract() == 0.0));
    let prunes = |bound: f64, incumbent: f64| {
        if integral_costs {
            (bound - 1e-6).ceil() >= incumbent - 1e-9
        } else {
            bound >= incumbent - 1e-9
        }
    };

    let mut res = BnbResult {
        status: BnbStatus::Infeasible,
        x: None,
        objective: None,
        bound: f64::NEG_INFINITY,
        nodes: 0,
        bound_history: Vec::new(),
        root_objective: f64::NAN,
        root_x: None,
    };
    let mut heap = BinaryHeap::new();
    heap.push(Node { lower: p.lower.clone(), upper: p.upper.clone(), bound: f64::NEG_INFINITY, depth: 0, id: 0 });
    let mut next_id = 1;
    let mut lp = p.clone();

    while let Some(node) = heap.pop() {
        if let Some(inc) = res.objective {
            if prunes(node.bound, inc) {
                continue;
            }
        }
        if res.nodes >= cfg.max_nodes || cfg.deadline.is_some_and(|d| Instant::now() >= d) {
            res.status = BnbStatus::Budget;
            res.bound = res.bound.max(node.bound.min(res.objective.unwrap_or(f64::INFINITY)));
            return res;
        }
        lp.lower.clone_from(&node.lower);
        lp.upper.clone_from(&node.upper);
        let sol = simplex(&lp, &cfg.simplex);
        res.nodes += 1;
        match sol.status {
            SimplexStatus::Optimal => {}
            SimplexStatus::Infeasible => {
                record_bound(&mut res, &heap);
                continue;
            }
            SimplexStatus::Unbounded if res.nodes == 1 => {
                res.status = BnbStatus::Unbounded;
                return res;
            }
            _ => {
                res.status = BnbStatus::NumericalFailure;
                return res;
            }
        }
        if res.nodes == 1 {
            res.root_objective = sol.objective;
            res.root_x = Some(sol.x.clone());
        }
        let bound = sol.objective.max(node.bound);
        if !res.objective.is_some_and(|inc| prunes(bound, inc)) {
            match most_fractional(&sol.x, integer, cfg.integrality_tol) {
                None => {
                    let x: Vec<f64> =
                        sol.x.iter().zip(integer).map(|(&v, &int)| if int { v.round() } else { v }).collect();
                    let obj = p.objective(&x);
                    if res.objective.is_none_or(|inc| obj < inc - 1e-9) {
                        res.objective = Some(obj);
                        res.x = Some(x);
                    }
                }
                Some(j) => {
                    if let Some(hx) = heuristic.and_then(|h| h(&sol.x)) {
                        let obj = p.objective(&hx);
                        if res.objective.is_none_or(|inc| obj < inc - 1e-9) {
                            res.objective = Some(obj);
                            res.x = Some(hx);
                        }
                        if prunes(bound, obj) {
                            record_bound(&mut res, &heap);
                            continue;
                        }
                    }
                    let v = sol.x[j];
                    let depth = node.depth + 1;
                    let mut down =
                        Node { lower: node.lower.clone(), upper: node.upper.clone(), bound, depth, id: next_id };
                    down.upper[j] = v.floor();
                    let mut up = Node { lower: node.lower, upper: node.upper, bound, depth, id: next_id + 1 };
                    up.lower[j] = v.ceil();
                    next_id += 2;
                    heap.push(down);
                    heap.push(up);
                }
            }
        }
        record_bound(&mut res, &heap);
    }
    match res.objective {
        Some(obj) => {
            res.status = BnbStatus::Optimal;
            res.bound = obj;
        }
        None => res.status = BnbStatus::Infeasible,
    }
    res
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ilp::Sense;
    use crate::solve::simplex::LpRow;

    fn cfg() -> BnbConfig {
        BnbConfig { simplex: SimplexOptions::default(), integrality_tol: 1e-6, max_nodes: 10_000, deadline: None }
    }

    fn triangle_cover() -> LpProblem {
        let row = |a: usize, b: usize| LpRow { terms: vec![(a, 1.0), (b, 1.0)], sense: Sense::Ge, rhs: 1.0 };
        LpProblem {
            cost: vec![1.0; 3],
            lower: vec![0.0; 3],
            upper: vec![1.0; 3],
            rows: vec![row(0, 1), row(1, 2), row(0, 2)],
        }
    }

    #[test]
    fn branches_to_integer_optimum() {
        let r = branch_and_bound(&triangle_cover(), &[true; 3], &cfg(), None);
        assert_eq!(r.status, BnbStatus::Optimal);
        assert_eq!(r.objective, Some(2.0));
        assert!(r.nodes > 1);
        assert!((r.root_objective - 1.5).abs() < 1e-9);
        assert!(r.bound_history.windows(2).all(|w| w[0] <= w[1] + 1e-12));
    }

    #[test]
    fn continuous_columns_skip_branching() {
        let r = branch_and_bound(&triangle_cover(), &[false; 3], &cfg(), None);
        assert_eq!(r.nodes, 1);
        assert_eq!(r.objective, Some(1.5));
    }

    #[test]
    fn node_budget_reports_budget() {
        let c = BnbConfig { max_nodes: 1, ..cfg() };
        let r = branch_and_bound(&triangle_cover(), &[true; 3], &c, None);
        assert_eq!(r.status, BnbStatus::Budget);
        assert!(r.bound >= 1.5 - 1e-9);
    }

    #[test]
    fn most_fractional_ties_lowest_index() {
        assert_eq!(most_fractional(&[0.5, 0.5, 0.2], &[true; 3], 1e-6), Some(0));
        assert_eq!(most_fractional(&[0.1, 0.4, 0.6], &[true; 3], 1e-6), Some(1));
        assert_eq!(most_fractional(&[0.5, 1.0], &[false, true], 1e-6), None);
    }
}
