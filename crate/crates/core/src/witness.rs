//! Witness enumeration: evaluates the full version of a query and records
//! which input tuples each witness uses and which view tuple it projects to.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::query::{Query, Rule, Term};
use crate::relcore::{Database, TupleId, TupleRef, Value};

/// The four view lists of a GDP instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewList {
    Del,
    Pres,
    Min,
    Max,
}

impl ViewList {
    pub const ALL: [ViewList; 4] = [ViewList::Del, ViewList::Pres, ViewList::Min, ViewList::Max];

    pub fn as_str(self) -> &'static str {
        match self {
            ViewList::Del => "del",
            ViewList::Pres => "pres",
            ViewList::Min => "min",
            ViewList::Max => "max",
        }
    }
}

/// One occurrence of a view in a GDP instance, e.g. the second min view.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ViewId {
    pub list: ViewList,
    pub index: usize,
}

impl ViewId {
    pub fn new(list: ViewList, index: usize) -> ViewId {
        ViewId { list, index }
    }
}

impl fmt::Display for ViewId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.list.as_str(), self.index)
    }
}

impl Serialize for ViewId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub rule: usize,
    /// Constants for `Rule::variables()` of the producing rule.
    pub valuation: Vec<Value>,
    /// Distinct tuples used, sorted; a self-join may map several atoms to
    /// one tuple.
    pub tuples: Vec<TupleId>,
    /// Index into `ProvenanceIndex::view_tuples`.
    pub view_tuple: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViewTuple {
    pub values: Vec<Value>,
    /// Indexes into `ProvenanceIndex::witnesses`, ascending.
    pub witnesses: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProvenanceIndex {
    pub view_id: Option<ViewId>,
    /// Sorted by `(rule, valuation)`.
    pub witnesses: Vec<Witness>,
    /// Sorted by values.
    pub view_tuples: Vec<ViewTuple>,
    pub tuple_witnesses: BTreeMap<TupleId, Vec<usize>>,
}

impl ProvenanceIndex {
    pub fn view_tuple_index(&self, values: &[Value]) -> Option<usize> {
        self.view_tuples.binary_search_by(|v| v.values.as_slice().cmp(values)).ok()
    }

    /// Distinct tuples that occur in some witness of view tuple `v`.
    pub fn tuples_of_view_tuple(&self, v: usize) -> BTreeSet<TupleId> {
        self.view_tuples[v].witnesses.iter().flat_map(|&w| self.witnesses[w].tuples.iter().copied()).collect()
    }

    pub fn to_json(&self, db: &Database) -> serde_json::Value {
        let witnesses: Vec<_> = self
            .witnesses
            .iter()
            .map(|w| {
                serde_json::json!({
                    "rule": w.rule,
                    "valuation": w.valuation,
                    "tuples": w.tuples.iter().map(|&t| db.tuple_ref(t).to_string()).collect::<Vec<_>>(),
                    "view_tuple": self.view_tuples[w.view_tuple].values,
                })
            })
            .collect();
        serde_json::json!({
            "view": self.view_id.map(|v| v.to_string()),
            "view_tuples": self.view_tuples.iter().map(|v| &v.values).collect::<Vec<_>>(),
            "witnesses": witnesses,
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("query `{query}` references unknown relation `{relation}`")]
    UnknownRelation { query: String, relation: String },
    #[error("atom {atom} has arity {got}, relation `{relation}` has arity {expected}")]
    ArityMismatch { atom: String, relation: String, expected: usize, got: usize },
}

pub fn check_query(db: &Database, q: &Query) -> Result<(), EvalError> {
    for a in q.rules.iter().flat_map(|r| &r.body) {
        let rel = db
            .relation(&a.relation)
            .ok_or_else(|| EvalError::UnknownRelation { query: q.name.clone(), relation: a.relation.clone() })?;
        if rel.arity() != a.terms.len() {
            return Err(EvalError::ArityMismatch {
                atom: a.to_string(),
                relation: a.relation.clone(),
                expected: rel.arity(),
                got: a.terms.len(),
            });
        }
    }
    Ok(())
}

pub fn enumerate_witnesses(db: &Database, view_id: Option<ViewId>, q: &Query) -> Result<ProvenanceIndex, EvalError> {
    check_query(db, q)?;
    let mut eval = Evaluator::new(db);
    let mut raw: Vec<(usize, Vec<Value>, Vec<TupleId>, Vec<Value>)> = Vec::new();
    for (ri, rule) in q.rules.iter().enumerate() {
        let plan = RulePlan::new(rule);
        eval.run(&plan, &mut |val, ids| {
            let mut tuples = ids.to_vec();
            tuples.sort_unstable();
            tuples.dedup();
            raw.push((ri, val.to_vec(), tuples, plan.project(val)));
        });
    }
    raw.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));

    let mut heads: BTreeMap<Vec<Value>, Vec<usize>> = BTreeMap::new();
    for (wi, r) in raw.iter().enumerate() {
        heads.entry(r.3.clone()).or_default().push(wi);
    }
    let mut view_of = vec![0; raw.len()];
    let view_tuples: Vec<ViewTuple> = heads
        .into_iter()
        .enumerate()
        .map(|(vi, (values, ws))| {
            for &w in &ws {
                view_of[w] = vi;
            }
            ViewTuple { values, witnesses: ws }
        })
        .collect();
    let mut tuple_witnesses: BTreeMap<TupleId, Vec<usize>> = BTreeMap::new();
    let witnesses: Vec<Witness> = raw
        .into_iter()
        .enumerate()
        .map(|(wi, (rule, valuation, tuples, _))| {
            for &t in &tuples {
                tuple_witnesses.entry(t).or_default().push(wi);
            }
            Witness { rule, valuation, tuples, view_tuple: view_of[wi] }
        })
        .collect();
    Ok(ProvenanceIndex { view_id, witnesses, view_tuples, tuple_witnesses })
}

/// Distinct answers of `q` on `db`, sorted.
pub fn evaluate(db: &Database, q: &Query) -> Result<BTreeSet<Vec<Value>>, EvalError> {
    check_query(db, q)?;
    let mut eval = Evaluator::new(db);
    let mut out = BTreeSet::new();
    for rule in &q.rules {
        let plan = RulePlan::new(rule);
        eval.run(&plan, &mut |val, _| {
            out.insert(plan.project(val));
        });
    }
    Ok(out)
}

/// |q(db)|.
pub fn evaluate_count(db: &Database, q: &Query) -> Result<usize, EvalError> {
    evaluate(db, q).map(|s| s.len())
}

/// |q(db)| − |q(db \ Γ)|.
pub fn delta_count<'a, I>(db: &Database, q: &Query, gamma: I) -> Result<usize, crate::Error>
where
    I: IntoIterator<Item = &'a TupleRef>,
{
    let before = evaluate_count(db, q)?;
    let after = evaluate_count(&db.delete_tuples(gamma)?, q)?;
    Ok(before - after)
}

/// Per-atom evaluation step of a rule, left to right.
struct AtomPlan {
    relation: String,
    /// Positions whose value is known before scanning: constants and
    /// variables bound by earlier atoms.
    key_positions: Vec<usize>,
    key_sources: Vec<KeySource>,
    /// Positions that bind a fresh variable (slot).
    binds: Vec<(usize, usize)>,
    /// Positions repeating a variable first bound in this same atom.
    repeats: Vec<(usize, usize)>,
}

enum KeySource {
    Const(Value),
    Slot(usize),
}

struct RulePlan {
    nvars: usize,
    head_slots: Vec<usize>,
    atoms: Vec<AtomPlan>,
}

impl RulePlan {
    fn new(rule: &Rule) -> RulePlan {
        let vars = rule.variables();
        let slot: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut bound = vec![false; vars.len()];
        let mut atoms = Vec::with_capacity(rule.body.len());
        for a in &rule.body {
            let mut plan = AtomPlan {
                relation: a.relation.clone(),
                key_positions: Vec::new(),
                key_sources: Vec::new(),
                binds: Vec::new(),
                repeats: Vec::new(),
            };
            let mut fresh: Vec<usize> = Vec::new();
            for (pos, t) in a.terms.iter().enumerate() {
                match t {
                    Term::Const(c) => {
                        plan.key_positions.push(pos);
                        plan.key_sources.push(KeySource::Const(c.clone()));
                    }
                    Term::Var(v) => {
                        let s = slot[v.as_str()];
                        if bound[s] {
                            plan.key_positions.push(pos);
                            plan.key_sources.push(KeySource::Slot(s));
                        } else if fresh.contains(&s) {
                            plan.repeats.push((pos, s));
                        } else {
                            fresh.push(s);
                            plan.binds.push((pos, s));
                        }
                    }
                }
            }
            for s in fresh {
                bound[s] = true;
            }
            atoms.push(plan);
        }
        let head_slots = rule.head.iter().map(|h| slot[h.as_str()]).collect();
        RulePlan { nvars: vars.len(), head_slots, atoms }
    }

    fn project(&self, val: &[Value]) -> Vec<Value> {
        self.head_slots.iter().map(|&s| val[s].clone()).collect()
    }
}

type Index = HashMap<Vec<Value>, Vec<(Vec<Value>, TupleId)>>;

/// Hash-index nested-loop evaluator; indexes are built lazily per
/// (relation, key positions) and reused across rules.
pub(crate) struct Evaluator<'a> {
    db: &'a Database,
    indexes: HashMap<(String, Vec<usize>), Index>,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(db: &'a Database) -> Self {
        Evaluator { db, indexes: HashMap::new() }
    }

    fn ensure_index(&mut self, relation: &str, positions: &[usize]) {
        let key = (relation.to_string(), positions.to_vec());
        if self.indexes.contains_key(&key) {
            return;
        }
        let rel = self.db.relation(relation).expect("checked by check_query");
        let offset = self.db.relation_offset(relation).expect("checked by check_query");
        let mut idx: Index = HashMap::new();
        for (i, (row, _)) in rel.rows().enumerate() {
            let k: Vec<Value> = positions.iter().map(|&p| row[p].clone()).collect();
            idx.entry(k).or_default().push((row.to_vec(), TupleId((offset + i) as u32)));
        }
        self.indexes.insert(key, idx);
    }

    fn run(&mut self, plan: &RulePlan, emit: &mut dyn FnMut(&[Value], &[TupleId])) {
        for a in &plan.atoms {
            self.ensure_index(&a.relation, &a.key_positions);
        }
        let indexes: Vec<&Index> =
            plan.atoms.iter().map(|a| &self.indexes[&(a.relation.clone(), a.key_positions.clone())]).collect();
        let mut val = vec![Value::Int(0); plan.nvars];
        let mut ids = Vec::with_capacity(plan.atoms.len());
        Self::step(plan, &indexes, 0, &mut val, &mut ids, emit);
    }

    fn step(
        plan: &RulePlan,
        indexes: &[&Index],
        depth: usize,
        val: &mut Vec<Value>,
        ids: &mut Vec<TupleId>,
        emit: &mut dyn FnMut(&[Value], &[TupleId]),
    ) {
        if depth == plan.atoms.len() {
            emit(val, ids);
            return;
        }
        let a = &plan.atoms[depth];
        let key: Vec<Value> = a
            .key_sources
            .iter()
            .map(|s| match s {
                KeySource::Const(c) => c.clone(),
                KeySource::Slot(i) => val[*i].clone(),
            })
            .collect();
        let Some(rows) = indexes[depth].get(&key) else { return };
        for (row, id) in rows {
            if a.repeats.iter().any(|&(p, s)| {
                let first = a.binds.iter().find(|b| b.1 == s).expect("repeat follows bind").0;
                row[p] != row[first]
            }) {
                continue;
            }
            for &(p, s) in &a.binds {
                val[s] = row[p].clone();
            }
            ids.push(*id);
            Self::step(plan, indexes, depth + 1, val, ids, emit);
            ids.pop();
        }
    }
}
