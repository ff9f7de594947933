//! GDP instances: one database plus deletion, preservation, minimize and
//! maximize view lists; adapters for the classical variants; and a
//! solver-independent verifier.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::query::{bind_head, existential_query, identity_queries, identity_query, parse_query, Query, QueryError};
use crate::relcore::{load_database_with, Database, DbError, LoadOptions, TupleRef, Value};
use crate::witness::{check_query, enumerate_witnesses, evaluate, evaluate_count, EvalError, ViewId, ViewList};

/// A view occurrence. `identity` names the relation when the query selects
/// a whole relation unchanged; such views count source tuples, weighted by
/// multiplicity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct View {
    pub query: Query,
    pub identity: Option<String>,
}

impl View {
    pub fn new(query: Query) -> View {
        let identity = query.identity_relation().map(str::to_string);
        View { query, identity }
    }

    /// A view over `query` that is never treated as an identity view, even
    /// if it selects a whole relation.
    pub fn plain(query: Query) -> View {
        View { query, identity: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstrainedView {
    pub view: View,
    pub k: usize,
}

#[derive(Debug, Error)]
pub enum GdpError {
    #[error("{view}: k = {k} outside [{lo}, {hi}]")]
    KOutOfRange { view: ViewId, k: usize, lo: usize, hi: usize },
    #[error("target {target:?} is not an answer of `{query}`")]
    TargetNotInView { query: String, target: Vec<Value> },
    #[error("query `{0}` is false on the database; nothing to delete")]
    NothingToDelete(String),
    #[error("resilience requires a Boolean query, `{0}` has head variables")]
    NotBoolean(String),
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("query file {path}: {source}")]
    QueryFile {
        path: PathBuf,
        #[source]
        source: QueryError,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Db(#[from] DbError),
}

#[derive(Clone, Debug)]
pub struct GdpInstance {
    db: Database,
    del: Vec<ConstrainedView>,
    pres: Vec<ConstrainedView>,
    min: Vec<View>,
    max: Vec<View>,
    /// |view(db)| per occurrence, indexed like `views()`.
    sizes: Vec<usize>,
}

impl GdpInstance {
    /// Validates every view against the schema and every k against its
    /// view size (del: 1..=|view|, pres: 0..=|view|).
    pub fn new(
        db: Database,
        del: Vec<ConstrainedView>,
        pres: Vec<ConstrainedView>,
        min: Vec<View>,
        max: Vec<View>,
    ) -> Result<GdpInstance, GdpError> {
        let mut inst = GdpInstance { db, del, pres, min, max, sizes: Vec::new() };
        let mut sizes = Vec::new();
        for (id, view) in inst.views() {
            check_query(&inst.db, &view.query)?;
            let n = evaluate_count(&inst.db, &view.query)?;
            let k = inst.k(id);
            let lo = usize::from(id.list == ViewList::Del);
            if let Some(k) = k {
                if k < lo || k > n {
                    return Err(GdpError::KOutOfRange { view: id, k, lo, hi: n });
                }
            }
            sizes.push(n);
        }
        inst.sizes = sizes;
        Ok(inst)
    }

    pub fn db(&self) -> &Database {
        &self.db
    }

    pub fn del(&self) -> &[ConstrainedView] {
        &self.del
    }

    pub fn pres(&self) -> &[ConstrainedView] {
        &self.pres
    }

    pub fn min(&self) -> &[View] {
        &self.min
    }

    pub fn max(&self) -> &[View] {
        &self.max
    }

    /// All view occurrences in list order del, pres, min, max.
    pub fn views(&self) -> Vec<(ViewId, &View)> {
        let mut out = Vec::new();
        out.extend(self.del.iter().enumerate().map(|(i, c)| (ViewId::new(ViewList::Del, i), &c.view)));
        out.extend(self.pres.iter().enumerate().map(|(i, c)| (ViewId::new(ViewList::Pres, i), &c.view)));
        out.extend(self.min.iter().enumerate().map(|(i, v)| (ViewId::new(ViewList::Min, i), v)));
        out.extend(self.max.iter().enumerate().map(|(i, v)| (ViewId::new(ViewList::Max, i), v)));
        out
    }

    pub fn view(&self, id: ViewId) -> &View {
        match id.list {
            ViewList::Del => &self.del[id.index].view,
            ViewList::Pres => &self.pres[id.index].view,
            ViewList::Min => &self.min[id.index],
            ViewList::Max => &self.max[id.index],
        }
    }

    pub fn k(&self, id: ViewId) -> Option<usize> {
        match id.list {
            ViewList::Del => Some(self.del[id.index].k),
            ViewList::Pres => Some(self.pres[id.index].k),
            ViewList::Min | ViewList::Max => None,
        }
    }

    /// |view(db)| for the occurrence.
    pub fn view_size(&self, id: ViewId) -> usize {
        let pos = self.views().iter().position(|(v, _)| *v == id).expect("view id belongs to instance");
        self.sizes[pos]
    }
}

fn constrained(q: &Query, k: usize) -> ConstrainedView {
    ConstrainedView { view: View::plain(q.clone()), k }
}

fn require_answer(db: &Database, q: &Query, target: &[Value]) -> Result<(), GdpError> {
    if !evaluate(db, q)?.contains(target) {
        return Err(GdpError::TargetNotInView { query: q.name.clone(), target: target.to_vec() });
    }
    Ok(())
}

fn identity_views(db: &Database) -> Vec<View> {
    identity_queries(db).into_iter().map(View::new).collect()
}

/// DP-SS: delete `target` from `q` while deleting as few source tuples as
/// possible.
pub fn make_dpss(db: &Database, q: &Query, target: &[Value]) -> Result<GdpInstance, GdpError> {
    check_query(db, q)?;
    require_answer(db, q, target)?;
    let del = vec![constrained(&bind_head(q, target)?, 1)];
    GdpInstance::new(db.clone(), del, vec![], identity_views(db), vec![])
}

/// Resilience: make the Boolean query `q` false with fewest deletions.
pub fn make_resilience(db: &Database, q: &Query) -> Result<GdpInstance, GdpError> {
    if !q.is_boolean() {
        return Err(GdpError::NotBoolean(q.name.clone()));
    }
    check_query(db, q)?;
    if evaluate_count(db, q)? == 0 {
        return Err(GdpError::NothingToDelete(q.name.clone()));
    }
    let del = vec![constrained(q, 1)];
    GdpInstance::new(db.clone(), del, vec![], identity_views(db), vec![])
}

/// DP-VS: delete `target` from `q` while losing as few other answers of
/// `q` as possible (the target itself counts).
pub fn make_dpvs(db: &Database, q: &Query, target: &[Value]) -> Result<GdpInstance, GdpError> {
    check_query(db, q)?;
    require_answer(db, q, target)?;
    let del = vec![constrained(&bind_head(q, target)?, 1)];
    GdpInstance::new(db.clone(), del, vec![], vec![View::plain(q.clone())], vec![])
}

/// ADP-SS: delete at least `k` answers of `q` with fewest source deletions.
pub fn make_adpss(db: &Database, q: &Query, k: usize) -> Result<GdpInstance, GdpError> {
    let del = vec![ConstrainedView { view: View::plain(q.clone()), k }];
    GdpInstance::new(db.clone(), del, vec![], identity_views(db), vec![])
}

/// SWP: keep every answer of `q` while deleting as many source tuples as
/// possible.
pub fn make_swp(db: &Database, q: &Query) -> Result<GdpInstance, GdpError> {
    check_query(db, q)?;
    let n = evaluate_count(db, q)?;
    let pres = vec![ConstrainedView { view: View::plain(q.clone()), k: n }];
    GdpInstance::new(db.clone(), vec![], pres, vec![], identity_views(db))
}

/// The classical problems expressible as GDP instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Dpss,
    Dpvs,
    Adpss,
    Swp,
    Res,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Dpss, Variant::Dpvs, Variant::Adpss, Variant::Swp, Variant::Res];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Dpss => "dpss",
            Variant::Dpvs => "dpvs",
            Variant::Adpss => "adpss",
            Variant::Swp => "swp",
            Variant::Res => "res",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown variant `{s}` (expected dpss, dpvs, adpss, swp or res)"))
    }
}

/// The answer with the median number of witnesses: answers sorted by
/// (witness count, values), lower median.
pub fn median_target(db: &Database, q: &Query) -> Result<Option<Vec<Value>>, GdpError> {
    let prov = enumerate_witnesses(db, None, q)?;
    let mut answers: Vec<(usize, &Vec<Value>)> =
        prov.view_tuples.iter().map(|v| (v.witnesses.len(), &v.values)).collect();
    answers.sort();
    Ok(answers.get(answers.len().saturating_sub(1) / 2).map(|(_, v)| (*v).clone()))
}

/// ceil(10% of the view size), at least 1.
pub fn default_adp_k(view_size: usize) -> usize {
    view_size.div_ceil(10).max(1)
}

/// Instantiates `variant` for `q`. DP targets default to [`median_target`],
/// ADP-SS `k` to [`default_adp_k`]; resilience uses the Boolean form of `q`.
pub fn make_variant(
    db: &Database,
    q: &Query,
    variant: Variant,
    target: Option<&[Value]>,
    k: Option<usize>,
) -> Result<GdpInstance, GdpError> {
    check_query(db, q)?;
    let pick = || -> Result<Vec<Value>, GdpError> {
        match target {
            Some(t) => Ok(t.to_vec()),
            None => median_target(db, q)?.ok_or_else(|| GdpError::NothingToDelete(q.name.clone())),
        }
    };
    match variant {
        Variant::Dpss => make_dpss(db, q, &pick()?),
        Variant::Dpvs => make_dpvs(db, q, &pick()?),
        Variant::Adpss => {
            let n = evaluate_count(db, q)?;
            if n == 0 {
                return Err(GdpError::NothingToDelete(q.name.clone()));
            }
            make_adpss(db, q, k.unwrap_or_else(|| default_adp_k(n)))
        }
        Variant::Swp => make_swp(db, q),
        Variant::Res => make_resilience(db, &existential_query(q)),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceConfig {
    database: String,
    #[serde(default)]
    header: bool,
    #[serde(default)]
    del: Vec<ConstrainedEntry>,
    #[serde(default)]
    pres: Vec<ConstrainedEntry>,
    #[serde(default)]
    min: Vec<ObjectiveEntry>,
    #[serde(default)]
    max: Vec<ObjectiveEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstrainedEntry {
    #[serde(flatten)]
    source: QuerySource,
    k: Option<usize>,
    k_percent: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectiveEntry {
    #[serde(default)]
    identity: bool,
    /// With `identity`, restricts to one relation instead of all.
    relation: Option<String>,
    #[serde(flatten)]
    source: QuerySource,
}

#[derive(Debug, Default, Deserialize)]
struct QuerySource {
    /// Path to a query file, relative to the config.
    query: Option<String>,
    /// Inline query text.
    text: Option<String>,
}

impl QuerySource {
    fn load(&self, base: &Path, cfg: &Path) -> Result<Query, GdpError> {
        match (&self.query, &self.text) {
            (Some(file), None) => {
                let path = base.join(file);
                let text = fs::read_to_string(&path).map_err(|source| GdpError::Io { path: path.clone(), source })?;
                parse_query(&text).map_err(|source| GdpError::QueryFile { path, source })
            }
            (None, Some(text)) => Ok(parse_query(text)?),
            _ => Err(GdpError::Config {
                path: cfg.to_path_buf(),
                message: "each entry needs exactly one of `query` or `text`".into(),
            }),
        }
    }
}

/// Loads a JSON instance config. Percentage requirements become
/// `ceil(k_percent / 100 · |view|)`.
pub fn load_instance(config_path: &Path) -> Result<GdpInstance, GdpError> {
    let cfg_err = |message: String| GdpError::Config { path: config_path.to_path_buf(), message };
    let text =
        fs::read_to_string(config_path).map_err(|source| GdpError::Io { path: config_path.to_path_buf(), source })?;
    let cfg: InstanceConfig = serde_json::from_str(&text).map_err(|e| cfg_err(e.to_string()))?;
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    let db = load_database_with(&base.join(&cfg.database), LoadOptions { header: cfg.header })?;

    let constrained = |entries: &[ConstrainedEntry], list: ViewList| -> Result<Vec<ConstrainedView>, GdpError> {
        entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let q = e.source.load(base, config_path)?;
                check_query(&db, &q)?;
                let k = match (e.k, e.k_percent) {
                    (Some(k), None) => k,
                    (None, Some(p)) if (0.0..=100.0).contains(&p) => {
                        let n = evaluate_count(&db, &q)?;
                        (p / 100.0 * n as f64 - 1e-9).ceil().max(0.0) as usize
                    }
                    (None, Some(p)) => return Err(cfg_err(format!("{list:?}{i}: k_percent {p} outside [0, 100]"))),
                    _ => return Err(cfg_err(format!("{list:?}{i}: give exactly one of `k` or `k_percent`"))),
                };
                Ok(ConstrainedView { view: View::new(q), k })
            })
            .collect()
    };
    let objective = |entries: &[ObjectiveEntry]| -> Result<Vec<View>, GdpError> {
        let mut out = Vec::new();
        for e in entries {
            if e.identity {
                if e.source.query.is_some() || e.source.text.is_some() {
                    return Err(cfg_err("`identity` entries take no query".into()));
                }
                match &e.relation {
                    Some(r) => {
                        let rel = db.relation(r).ok_or_else(|| DbError::UnknownRelation(r.clone()))?;
                        out.push(View::new(identity_query(r, rel.arity())));
                    }
                    None => out.extend(identity_views(&db)),
                }
            } else {
                out.push(View::new(e.source.load(base, config_path)?));
            }
        }
        Ok(out)
    };
    let del = constrained(&cfg.del, ViewList::Del)?;
    let pres = constrained(&cfg.pres, ViewList::Pres)?;
    let min = objective(&cfg.min)?;
    let max = objective(&cfg.max)?;
    GdpInstance::new(db, del, pres, min, max)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ViewDelta {
    pub view: ViewId,
    pub before: usize,
    pub after: usize,
    /// `before − after`.
    pub delta: usize,
    /// Objective contribution magnitude: Σ m(t) over deleted tuples for
    /// identity views, `delta` otherwise.
    pub weighted: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub feasible: bool,
    pub deltas: Vec<ViewDelta>,
    pub objective: i64,
    pub violated_constraints: Vec<String>,
}

/// Recomputes every view on db \ Γ and checks the deletion and
/// preservation requirements. Never looks at a solver model.
pub fn verify<'a, I>(instance: &GdpInstance, gamma: I) -> Result<VerificationReport, GdpError>
where
    I: IntoIterator<Item = &'a TupleRef>,
{
    let gamma: BTreeSet<&TupleRef> = gamma.into_iter().collect();
    let db = instance.db();
    let after_db = db.delete_tuples(gamma.iter().copied())?;
    let mut deltas = Vec::new();
    let mut violated = Vec::new();
    let mut objective = 0i64;
    for (id, view) in instance.views() {
        let before = instance.view_size(id);
        let after = evaluate_count(&after_db, &view.query)?;
        let delta = before - after;
        let weighted = match &view.identity {
            Some(rel) => gamma.iter().filter(|t| &t.relation == rel).map(|t| db.tuple_weight(t)).sum::<Result<u64, _>>()?,
            None => delta as u64,
        };
        match id.list {
            ViewList::Del => {
                let k = instance.k(id).unwrap();
                if after + k > before {
                    violated.push(format!("{id}: {after} answers remain, at most {} allowed", before - k));
                }
            }
            ViewList::Pres => {
                let k = instance.k(id).unwrap();
                if after < k {
                    violated.push(format!("{id}: {after} answers remain, at least {k} required"));
                }
            }
            ViewList::Min => objective += weighted as i64,
            ViewList::Max => objective -= weighted as i64,
        }
        deltas.push(ViewDelta { view: id, before, after, delta, weighted });
    }
    Ok(VerificationReport { feasible: violated.is_empty(), deltas, objective, violated_constraints: violated })
}
