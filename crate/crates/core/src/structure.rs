//! Syntactic tractability analysis of queries.
//!
//! Every check works on the query text alone. Verdicts are only issued for
//! self-join-free conjunctive queries, plus one recognised union with
//! self-joins (see [`triangle_chain_union`]).

use std::collections::BTreeSet;

use serde::Serialize;

use crate::gdp::GdpInstance;
use crate::query::{alpha_equivalent, existential_query, parse_query, Atom, Query, Rule};
use crate::relcore::Semantics;
use crate::witness::ViewId;

/// Atoms sharing a non-head variable are adjacent; atoms whose variables
/// are all head variables are left out.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExistentialGraph {
    /// Indexes into the rule body.
    pub nodes: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    /// Connected components, each sorted, ordered by first node.
    pub components: Vec<Vec<usize>>,
}

pub fn existential_graph(rule: &Rule) -> ExistentialGraph {
    let head = rule.head_set();
    let exist: Vec<BTreeSet<&str>> =
        rule.body.iter().map(|a| a.var_set().into_iter().filter(|v| !head.contains(v)).collect()).collect();
    let nodes: Vec<usize> = (0..rule.body.len()).filter(|&i| !exist[i].is_empty()).collect();
    let mut edges = Vec::new();
    for (p, &i) in nodes.iter().enumerate() {
        for &j in &nodes[p + 1..] {
            if !exist[i].is_disjoint(&exist[j]) {
                edges.push((i, j));
            }
        }
    }
    let components = connected(&nodes, |i, j| !exist[i].is_disjoint(&exist[j]));
    ExistentialGraph { nodes, edges, components }
}

/// Components of `nodes` under the symmetric relation `adj`.
fn connected(nodes: &[usize], adj: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut seen = vec![false; nodes.len()];
    let mut out = Vec::new();
    for s in 0..nodes.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![nodes[s]];
        let mut stack = vec![s];
        while let Some(p) = stack.pop() {
            for q in 0..nodes.len() {
                if !seen[q] && adj(nodes[p], nodes[q]) {
                    seen[q] = true;
                    comp.push(nodes[q]);
                    stack.push(q);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

fn head_vars_of<'a>(rule: &'a Rule, atom: &'a Atom) -> BTreeSet<&'a str> {
    let head = rule.head_set();
    atom.var_set().into_iter().filter(|v| head.contains(v)).collect()
}

/// Every existential component's atoms carry the same head variables.
pub fn head_clustering(rule: &Rule) -> bool {
    existential_graph(rule).components.iter().all(|c| {
        let first = head_vars_of(rule, &rule.body[c[0]]);
        c.iter().all(|&i| head_vars_of(rule, &rule.body[i]) == first)
    })
}

/// For every existential component, some atom of the rule contains all
/// head variables that occur in the component.
pub fn head_domination(rule: &Rule) -> bool {
    existential_graph(rule).components.iter().all(|c| {
        let need: BTreeSet<&str> = c.iter().flat_map(|&i| head_vars_of(rule, &rule.body[i])).collect();
        rule.body.iter().any(|a| need.is_subset(&a.var_set()))
    })
}

/// Atoms whose variables strictly contain another atom's variables (or
/// equal those of an earlier atom) can be treated as undeletable.
fn dominated(body: &[Atom]) -> Vec<bool> {
    let sets: Vec<BTreeSet<&str>> = body.iter().map(Atom::var_set).collect();
    (0..body.len())
        .map(|i| {
            (0..body.len()).any(|j| {
                j != i && sets[j].is_subset(&sets[i]) && (sets[j].len() < sets[i].len() || j < i)
            })
        })
        .collect()
}

/// Three non-dominated atoms such that each pair is joined by a path of
/// atoms whose shared variables avoid the third atom. Head variables are
/// ignored; apply to the Boolean form of the query.
pub fn has_triad(rule: &Rule) -> bool {
    find_triad(rule).is_some()
}

pub fn find_triad(rule: &Rule) -> Option<[usize; 3]> {
    let body = &rule.body;
    let sets: Vec<BTreeSet<&str>> = body.iter().map(Atom::var_set).collect();
    let dom = dominated(body);
    let cands: Vec<usize> = (0..body.len()).filter(|&i| !dom[i]).collect();
    let linked = |a: usize, b: usize, avoid: usize| {
        let others: Vec<usize> = (0..body.len()).filter(|&i| i != avoid).collect();
        let comps = connected(&others, |i, j| sets[i].intersection(&sets[j]).any(|v| !sets[avoid].contains(v)));
        comps.iter().any(|c| c.contains(&a) && c.contains(&b))
    };
    for (p, &a) in cands.iter().enumerate() {
        for (q, &b) in cands.iter().enumerate().skip(p + 1) {
            for &c in &cands[q + 1..] {
                if linked(a, b, c) && linked(b, c, a) && linked(a, c, b) {
                    return Some([a, b, c]);
                }
            }
        }
    }
    None
}

/// The atoms admit an order in which every variable occurs in a contiguous
/// run of atoms.
pub fn is_linear(rule: &Rule) -> bool {
    let sets: Vec<BTreeSet<&str>> = rule.body.iter().map(Atom::var_set).collect();
    let mut order = Vec::new();
    let mut used = vec![false; sets.len()];
    extend_linear(&sets, &mut order, &mut used)
}

fn extend_linear(sets: &[BTreeSet<&str>], order: &mut Vec<usize>, used: &mut [bool]) -> bool {
    if order.len() == sets.len() {
        return true;
    }
    for i in 0..sets.len() {
        if used[i] {
            continue;
        }
        // a variable already placed must still be open in the last atom
        let last = order.last().map(|&j| &sets[j]);
        let reopens = sets[i]
            .iter()
            .any(|v| order.iter().any(|&j| sets[j].contains(v)) && !last.is_some_and(|l| l.contains(v)));
        if reopens {
            continue;
        }
        order.push(i);
        used[i] = true;
        if extend_linear(sets, order, used) {
            return true;
        }
        used[i] = false;
        order.pop();
    }
    false
}

/// Removes the variable `v` from head and body.
fn strip_var(rule: &Rule, v: &str) -> Rule {
    Rule {
        head: rule.head.iter().filter(|h| h.as_str() != v).cloned().collect(),
        body: rule
            .body
            .iter()
            .map(|a| Atom {
                relation: a.relation.clone(),
                terms: a.terms.iter().filter(|t| t.as_var() != Some(v)).cloned().collect(),
            })
            .collect(),
    }
}

/// Subquery on the atoms `idx`, keeping only head variables that occur there.
fn sub_rule(rule: &Rule, idx: &[usize]) -> Rule {
    let body: Vec<Atom> = idx.iter().map(|&i| rule.body[i].clone()).collect();
    let vars: BTreeSet<&str> = body.iter().flat_map(Atom::var_set).collect();
    Rule { head: rule.head.iter().filter(|h| vars.contains(h.as_str())).cloned().collect(), body }
}

/// An atom whose variables lie inside every other atom's, and which is
/// either contained in or contains the head.
fn singleton_atom(rule: &Rule) -> Option<usize> {
    let head = rule.head_set();
    let sets: Vec<BTreeSet<&str>> = rule.body.iter().map(Atom::var_set).collect();
    (0..sets.len()).find(|&i| {
        (0..sets.len()).all(|j| sets[i].is_subset(&sets[j])) && (sets[i].is_subset(&head) || head.is_subset(&sets[i]))
    })
}

/// Aggregated-deletion tractability: Boolean and triad-free, or a singleton
/// atom, or reducible to those by dropping head variables present in every
/// atom and splitting disconnected parts.
pub fn adp_tractable(rule: &Rule) -> Result<String, String> {
    if rule.is_boolean() {
        return match find_triad(rule) {
            None => Ok("boolean without triad".into()),
            Some(t) => Err(format!("boolean with triad {}", show_atoms(rule, &t))),
        };
    }
    if let Some(i) = singleton_atom(rule) {
        return Ok(format!("singleton atom {}", rule.body[i]));
    }
    if let Some(v) = rule.head.iter().find(|h| rule.body.iter().all(|a| a.var_set().contains(h.as_str()))) {
        return adp_tractable(&strip_var(rule, v)).map(|r| format!("drop universal {v}; {r}"));
    }
    let sets: Vec<BTreeSet<&str>> = rule.body.iter().map(Atom::var_set).collect();
    let all: Vec<usize> = (0..rule.body.len()).collect();
    let comps = connected(&all, |i, j| !sets[i].is_disjoint(&sets[j]));
    if comps.len() > 1 {
        let mut reasons = Vec::new();
        for c in &comps {
            let r = adp_tractable(&sub_rule(rule, c))?;
            reasons.push(format!("[{r}]"));
        }
        return Ok(format!("components {}", reasons.join(" ")));
    }
    Err("no singleton atom, universal head variable or split applies".into())
}

fn show_atoms(rule: &Rule, idx: &[usize]) -> String {
    idx.iter().map(|&i| rule.body[i].to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Ptime,
    Hard,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Assessment {
    pub verdict: Verdict,
    pub reason: String,
}

impl Assessment {
    fn new(verdict: Verdict, reason: impl Into<String>) -> Assessment {
        Assessment { verdict, reason: reason.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TractabilityReport {
    pub query: String,
    pub semantics: Semantics,
    pub self_join_free_cq: bool,
    pub dpss: Assessment,
    pub dpvs: Assessment,
    pub adpss: Assessment,
    pub swp: Assessment,
}

/// The recognised union: a self-join triangle and a self-join 2-path over
/// one ternary relation, projected on the shared first column.
pub const TRIANGLE_CHAIN_UNION: &str =
    "Q(x) :- R(x,a,b), R(x,b,c), R(x,c,a).\nQ(x) :- R(x,e,f), R(x,f,g).";

pub fn triangle_chain_union() -> Query {
    parse_query(TRIANGLE_CHAIN_UNION).expect("static query parses")
}

pub fn classify(q: &Query, semantics: Semantics) -> TractabilityReport {
    let sjf = q.is_self_join_free_cq();
    let mut report = TractabilityReport {
        query: q.to_string(),
        semantics,
        self_join_free_cq: sjf,
        dpss: Assessment::new(Verdict::Unknown, "outside the self-join-free conjunctive fragment"),
        dpvs: Assessment::new(Verdict::Unknown, "outside the self-join-free conjunctive fragment"),
        adpss: Assessment::new(Verdict::Unknown, "outside the self-join-free conjunctive fragment"),
        swp: Assessment::new(Verdict::Unknown, "outside the self-join-free conjunctive fragment"),
    };
    if !sjf {
        if alpha_equivalent(q, &triangle_chain_union()) {
            // multiplicity-1 bags are sets, so this covers both semantics
            let why = "every answer's witnesses can be cut by deleting facts that contain the head";
            report.dpvs = Assessment::new(Verdict::Ptime, format!("triangle/2-path union: {why}"));
            report.swp = Assessment::new(Verdict::Ptime, "triangle/2-path union: the 2-path rule dominates the triangle rule");
        }
        return report;
    }
    let rule = &q.rules[0];
    let set = semantics == Semantics::Set;
    let boolean = &existential_query(q).rules[0];

    report.dpss = match (set, find_triad(boolean)) {
        (true, None) => Assessment::new(Verdict::Ptime, "existential query has no triad"),
        (true, Some(t)) => Assessment::new(Verdict::Hard, format!("triad {}", show_atoms(rule, &t))),
        (false, _) if is_linear(boolean) => Assessment::new(Verdict::Ptime, "existential query is linear"),
        (false, _) => Assessment::new(Verdict::Unknown, "existential query is not linear"),
    };
    report.dpvs = match (set, head_domination(rule)) {
        (true, true) => Assessment::new(Verdict::Ptime, "head domination"),
        (true, false) => Assessment::new(Verdict::Hard, violating_component(rule, "no atom covers the head variables of")),
        (false, _) => Assessment::new(Verdict::Unknown, "criterion stated for set semantics"),
    };
    report.swp = match (head_clustering(rule), set) {
        (true, _) => Assessment::new(Verdict::Ptime, "head clustering"),
        (false, true) => Assessment::new(Verdict::Hard, violating_component(rule, "head variables differ inside")),
        (false, false) => Assessment::new(Verdict::Unknown, "no head clustering"),
    };
    report.adpss = match (set, adp_tractable(rule)) {
        (true, Ok(r)) => Assessment::new(Verdict::Ptime, r),
        (true, Err(r)) => Assessment::new(Verdict::Hard, r),
        (false, _) => Assessment::new(Verdict::Unknown, "criterion stated for set semantics"),
    };
    report
}

fn violating_component(rule: &Rule, what: &str) -> String {
    let g = existential_graph(rule);
    let bad = g.components.iter().find(|c| {
        let need: BTreeSet<&str> = c.iter().flat_map(|&i| head_vars_of(rule, &rule.body[i])).collect();
        let first = head_vars_of(rule, &rule.body[c[0]]);
        !c.iter().all(|&i| head_vars_of(rule, &rule.body[i]) == first)
            || !rule.body.iter().any(|a| need.is_subset(&a.var_set()))
    });
    match bad {
        Some(c) => format!("{what} component {{{}}}", show_atoms(rule, c)),
        None => what.to_string(),
    }
}

/// Reports for every non-identity view of an instance.
pub fn classify_instance(inst: &GdpInstance) -> Vec<(ViewId, TractabilityReport)> {
    let sem = inst.db().semantics();
    inst.views()
        .into_iter()
        .filter(|(_, v)| v.identity.is_none())
        .map(|(id, v)| (id, classify(&v.query, sem)))
        .collect()
}
