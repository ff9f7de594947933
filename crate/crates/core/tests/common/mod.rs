//! Random instances and reference checks shared by the integration tests
//! and the acceptance harness.
#![allow(dead_code)]

use gdp_core::bench::gen::{gen_random, GenProfile};
use gdp_core::gdp::{make_variant, ConstrainedView, GdpInstance, Variant, View};
use gdp_core::ilp::{IlpModel, LinearConstraint, Mode, Sense, Tag, VarId, Variable};
use gdp_core::query::{full_query, identity_query, parse_query, Query};
use gdp_core::relcore::{Database, Semantics, TupleId, TupleRef, Value};
use gdp_core::witness::evaluate_count;
use rand::seq::IndexedRandom;
use rand::Rng;

pub const CHAIN2: &str = "Q(x) :- R(x,y), S(y,z).";
pub const STAR3: &str = "Q(a) :- R(a,b), S(a,c), T(a,d).";
/// The 3-star with the first relation repeated.
pub const STAR3_REPEATED: &str = "Q(a) :- R(a,b), S(a,c), R(a,d).";
pub const TRIANGLE: &str = "Q(x) :- R(x,y), S(y,z), T(z,x).";

pub fn q(text: &str) -> Query {
    parse_query(text).unwrap()
}

pub fn random_db<R: Rng>(rng: &mut R, query: &Query, n: usize, max_domain: u64, semantics: Semantics) -> Database {
    let profile = GenProfile {
        query: query.clone(),
        n_tuples: n,
        max_domain,
        semantics,
        max_bag: 3,
        seed: rng.random(),
    };
    gen_random(&profile).unwrap()
}

/// A view for an objective list: the query, its full version, or an
/// identity view over one relation.
fn objective_view<R: Rng>(rng: &mut R, db: &Database, query: &Query) -> View {
    match rng.random_range(0..3) {
        0 => View::plain(query.clone()),
        1 => View::plain(full_query(query)),
        _ => {
            let rel = db.relations().choose(rng).unwrap();
            View::new(identity_query(rel.name(), rel.arity()))
        }
    }
}

/// Either a classical variant or a mixed instance with random roles and
/// thresholds. Returns `None` when the draw has no valid instance.
pub fn random_instance<R: Rng>(rng: &mut R, db: &Database, query: &Query) -> Option<GdpInstance> {
    if rng.random_bool(0.4) {
        let variant = *[Variant::Dpss, Variant::Dpvs, Variant::Adpss, Variant::Swp].choose(rng).unwrap();
        return make_variant(db, query, variant, None, None).ok();
    }
    let n = evaluate_count(db, query).unwrap();
    let mut del = Vec::new();
    let mut pres = Vec::new();
    if n > 0 && rng.random_bool(0.6) {
        del.push(ConstrainedView { view: View::plain(query.clone()), k: rng.random_range(1..=n) });
    }
    if rng.random_bool(0.5) {
        let view = if rng.random_bool(0.5) { View::plain(query.clone()) } else { objective_view(rng, db, query) };
        let m = evaluate_count(db, &view.query).unwrap();
        pres.push(ConstrainedView { view, k: rng.random_range(0..=m) });
    }
    let min = (0..rng.random_range(0..=2)).map(|_| objective_view(rng, db, query)).collect();
    let max = (0..rng.random_range(0..=2)).map(|_| objective_view(rng, db, query)).collect();
    GdpInstance::new(db.clone(), del, pres, min, max).ok()
}

/// A random 0/1 program with small integer coefficients.
pub fn random_model<R: Rng>(rng: &mut R, n_vars: usize, n_rows: usize) -> IlpModel {
    let mut m = IlpModel::empty(Mode::Naive);
    m.variables = (0..n_vars).map(|j| Variable { id: VarId::Tuple(TupleId(j as u32)), integer: true }).collect();
    m.tuple_refs = (0..n_vars).map(|j| TupleRef::new("X", vec![Value::Int(j as i64)])).collect();
    m.objective = (0..n_vars).map(|j| (j, rng.random_range(-5..=5))).filter(|&(_, c)| c != 0).collect();
    m.offset = rng.random_range(-3..=3);
    for _ in 0..n_rows {
        let mut terms: Vec<(usize, i64)> = Vec::new();
        for j in 0..n_vars {
            if rng.random_bool(0.4) {
                let c = rng.random_range(-3..=3);
                if c != 0 {
                    terms.push((j, c));
                }
            }
        }
        if terms.is_empty() {
            continue;
        }
        let lo: i64 = terms.iter().map(|&(_, c)| c.min(0)).sum();
        let hi: i64 = terms.iter().map(|&(_, c)| c.max(0)).sum();
        let sense = *[Sense::Le, Sense::Ge, Sense::Ge, Sense::Le, Sense::Eq].choose(rng).unwrap();
        let rhs = rng.random_range(lo - 1..=hi + 1);
        m.constraints.push(LinearConstraint { terms, sense, rhs, tag: Tag::Pc1 });
    }
    m
}

/// Exhaustive minimum over `{0,1}^n`, or `None` when infeasible.
pub fn enumerate_binary(m: &IlpModel) -> Option<i64> {
    let n = m.variables.len();
    assert!(n <= 24);
    let mut best: Option<i64> = None;
    for mask in 0u32..(1u32 << n) {
        let bit = |j: usize| i64::from(mask >> j & 1 == 1);
        let ok = m.constraints.iter().all(|c| {
            let a: i64 = c.terms.iter().map(|&(j, k)| k * bit(j)).sum();
            match c.sense {
                Sense::Le => a <= c.rhs,
                Sense::Ge => a >= c.rhs,
                Sense::Eq => a == c.rhs,
            }
        });
        if ok {
            let v = m.offset + m.objective.iter().map(|&(j, k)| k * bit(j)).sum::<i64>();
            best = Some(best.map_or(v, |b| b.min(v)));
        }
    }
    best
}

/// A random self-join-free conjunctive query over `n_atoms` distinct
/// relations and variables drawn from a small pool.
pub fn random_cq<R: Rng>(rng: &mut R, n_atoms: usize, boolean: bool) -> Query {
    const VARS: [&str; 5] = ["x", "y", "z", "u", "v"];
    let mut body = Vec::new();
    let mut used: Vec<&str> = Vec::new();
    for i in 0..n_atoms {
        let arity = rng.random_range(1..=3);
        let mut vars: Vec<&str> = Vec::new();
        while vars.len() < arity {
            let v = *VARS.choose(rng).unwrap();
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        for v in &vars {
            if !used.contains(v) {
                used.push(v);
            }
        }
        body.push(format!("R{i}({})", vars.join(",")));
    }
    let head: Vec<&str> = if boolean { Vec::new() } else { used.iter().copied().filter(|_| rng.random_bool(0.4)).collect() };
    q(&format!("Q({}) :- {}.", head.join(","), body.join(", ")))
}
