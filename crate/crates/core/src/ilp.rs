//! Compiles a GDP instance into a 0/1 integer program.
//!
//! Variables: `X[t]` per database tuple (shared by all views), and per
//! view occurrence `X[w]` per witness and `X[v]` per view tuple. A value of
//! 1 reads as "deleted". Constraint families:
//!
//! * UC (del):  Σ X[v] ≥ k
//! * UC (pres): Σ X[v] ≤ |view| − k
//! * PC1: X[t] ≤ X[w] for t ∈ w
//! * PC2: Σ_{t∈w} X[t] ≥ X[w]
//! * PC3: Σ_{w⊇v} X[w] − X[v] ≤ |W_v| − 1
//! * PC4: X[w] ≥ X[v] for w ⊇ v
//! * SC:  X[t] − Σ_{w∋t, w⊇v} X[w] ≤ 1 − |{w∋t, w⊇v}|
//!
//! Which families a view gets depends on its list and the [`Mode`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::gdp::GdpInstance;
use crate::relcore::{TupleId, TupleRef};
use crate::witness::{enumerate_witnesses, EvalError, ProvenanceIndex, ViewId, ViewList};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// PC1–PC4 on every view.
    Naive,
    /// One-sided: PC1+PC3 on pres/min views, PC2+PC4 on del/max views.
    Wildcard,
    /// Wildcard with PC1 on pres views tightened to SC.
    #[default]
    Smoothed,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Naive, Mode::Wildcard, Mode::Smoothed];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Naive => "naive",
            Mode::Wildcard => "wildcard",
            Mode::Smoothed => "smoothed",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "naive" => Ok(Mode::Naive),
            "wildcard" => Ok(Mode::Wildcard),
            "smoothed" => Ok(Mode::Smoothed),
            other => Err(format!("unknown mode `{other}` (expected naive, wildcard or smoothed)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarId {
    Tuple(TupleId),
    Witness { view: ViewId, index: usize },
    View { view: ViewId, index: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Tag {
    UcDel,
    UcPres,
    Pc1,
    Pc2,
    Pc3,
    Pc4,
    Sc,
}

impl Tag {
    pub const ALL: [Tag; 7] = [Tag::UcDel, Tag::UcPres, Tag::Pc1, Tag::Pc2, Tag::Pc3, Tag::Pc4, Tag::Sc];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::UcDel => "uc_del",
            Tag::UcPres => "uc_pres",
            Tag::Pc1 => "pc1",
            Tag::Pc2 => "pc2",
            Tag::Pc3 => "pc3",
            Tag::Pc4 => "pc4",
            Tag::Sc => "sc",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn as_str(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// `Σ coef · x  sense  rhs` over variable indexes of the owning model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, i64)>,
    pub sense: Sense,
    pub rhs: i64,
    pub tag: Tag,
}

impl LinearConstraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, c)| c as f64 * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        let r = self.rhs as f64;
        match self.sense {
            Sense::Le => (a - r).max(0.0),
            Sense::Ge => (r - a).max(0.0),
            Sense::Eq => (a - r).abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub id: VarId,
    pub integer: bool,
}

/// Minimize `Σ objective + offset` over `x ∈ [0,1]^n` subject to the
/// constraints, with integrality where flagged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IlpModel {
    pub mode: Mode,
    /// Sorted by `VarId`.
    pub variables: Vec<Variable>,
    /// Sorted by variable index, no zeros.
    pub objective: Vec<(usize, i64)>,
    pub offset: i64,
    pub constraints: Vec<LinearConstraint>,
    /// Variables substituted by a constant during the build.
    pub fixed: Vec<(VarId, i64)>,
    /// Every database tuple, indexed by `TupleId`.
    pub tuple_refs: Vec<TupleRef>,
    /// What each witness and view variable means in terms of tuple
    /// variables; lets a solver complete a tuple assignment.
    pub implied: Vec<Implied>,
}

/// `var = AND over clauses of (OR over the clause's tuple variables)`.
/// A witness variable has one clause; a view variable has one per
/// witness not fixed to 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Implied {
    pub var: usize,
    pub clauses: Vec<Vec<usize>>,
}

impl Implied {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let all = self.clauses.iter().all(|c| c.iter().any(|&t| x[t] > 0.5));
        if all {
            1.0
        } else {
            0.0
        }
    }
}

impl IlpModel {
    pub fn empty(mode: Mode) -> IlpModel {
        IlpModel {
            mode,
            variables: Vec::new(),
            objective: Vec::new(),
            offset: 0,
            constraints: Vec::new(),
            fixed: Vec::new(),
            tuple_refs: Vec::new(),
            implied: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var_index(&self, id: &VarId) -> Option<usize> {
        self.variables.binary_search_by(|v| v.id.cmp(id)).ok()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.offset as f64 + self.objective.iter().map(|&(j, c)| c as f64 * x[j]).sum::<f64>()
    }

    /// Dense objective vector.
    pub fn cost_vector(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.num_vars()];
        for &(j, v) in &self.objective {
            c[j] = v as f64;
        }
        c
    }

    pub fn is_integer_program(&self) -> bool {
        self.variables.iter().all(|v| v.integer)
    }

    pub fn describe_var(&self, j: usize) -> String {
        match self.variables[j].id {
            VarId::Tuple(t) => format!("X[{}]", self.tuple_refs[t.index()]),
            VarId::Witness { view, index } => format!("X[w{index}@{view}]"),
            VarId::View { view, index } => format!("X[v{index}@{view}]"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    /// Identity min/max views put weight m(t) on X[t] directly instead of
    /// getting their own witness and view variables.
    pub collapse_identity: bool,
    /// A del view that must lose every answer fixes its X[v] and X[w] to 1,
    /// leaving one covering row per witness; witnesses elsewhere that
    /// contain such a witness's tuples are fixed to 1 as well.
    pub fix_forced: bool,
    /// Drop PC1 rows implied by an SC row (see [`prune_subsumed`]).
    pub prune_subsumed: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { collapse_identity: true, fix_forced: true, prune_subsumed: true }
    }
}

/// Witness indexes for every view of `instance`, in `instance.views()`
/// order.
pub fn enumerate_all(instance: &GdpInstance) -> Result<Vec<ProvenanceIndex>, EvalError> {
    let views = instance.views();
    crate::par::map(&views, |(id, v)| enumerate_witnesses(instance.db(), Some(*id), &v.query))
        .into_iter()
        .collect()
}

pub fn build(instance: &GdpInstance, mode: Mode) -> Result<IlpModel, EvalError> {
    build_with(instance, mode, BuildOptions::default())
}

pub fn build_with(instance: &GdpInstance, mode: Mode, opts: BuildOptions) -> Result<IlpModel, EvalError> {
    let prov = enumerate_all(instance)?;
    Ok(build_from(instance, &prov, mode, opts))
}

fn families(list: ViewList, mode: Mode) -> &'static [Tag] {
    use Tag::*;
    match (mode, list) {
        (Mode::Naive, _) => &[Pc1, Pc2, Pc3, Pc4],
        (Mode::Wildcard, ViewList::Pres | ViewList::Min) => &[Pc1, Pc3],
        (Mode::Smoothed, ViewList::Pres) => &[Pc1, Sc, Pc3],
        (Mode::Smoothed, ViewList::Min) => &[Pc1, Pc3],
        (_, ViewList::Del | ViewList::Max) => &[Pc2, Pc4],
    }
}

/// Row under construction; variables are still `VarId`s.
struct Row {
    terms: Vec<(VarId, i64)>,
    sense: Sense,
    rhs: i64,
    tag: Tag,
}

/// Compiles using precomputed witness indexes (one per `instance.views()`
/// entry).
pub fn build_from(instance: &GdpInstance, prov: &[ProvenanceIndex], mode: Mode, opts: BuildOptions) -> IlpModel {
    let db = instance.db();
    let views = instance.views();
    assert_eq!(views.len(), prov.len(), "one provenance index per view");
    let tuple_refs: Vec<TupleRef> = db.tuples().map(|(_, t, _)| t).collect();
    let weight = |t: TupleId| -> i64 { db.tuple_weight(&tuple_refs[t.index()]).expect("tuple from db") as i64 };

    let mut objective: BTreeMap<VarId, i64> = BTreeMap::new();
    let mut rows: Vec<Row> = Vec::new();
    let mut fixed: BTreeMap<VarId, i64> = BTreeMap::new();
    let mut meaning: Vec<(VarId, Vec<&[TupleId]>)> = Vec::new();

    // Del views that must lose every answer.
    let forced: Vec<bool> = views
        .iter()
        .zip(prov)
        .map(|((id, _), p)| {
            opts.fix_forced && id.list == ViewList::Del && instance.k(*id) == Some(p.view_tuples.len())
        })
        .collect();
    let forced_sets: Vec<&[TupleId]> = views
        .iter()
        .zip(prov)
        .zip(&forced)
        .filter(|(_, &f)| f)
        .flat_map(|((_, p), _)| p.witnesses.iter().map(|w| w.tuples.as_slice()))
        .collect();

    for (((id, view), p), &is_forced) in views.iter().zip(prov).zip(&forced) {
        let id = *id;
        let collapsed = opts.collapse_identity
            && view.identity.is_some()
            && matches!(id.list, ViewList::Min | ViewList::Max);
        let sign = match id.list {
            ViewList::Min => 1,
            ViewList::Max => -1,
            _ => 0,
        };

        if collapsed {
            for t in p.tuple_witnesses.keys() {
                *objective.entry(VarId::Tuple(*t)).or_insert(0) += sign * weight(*t);
            }
            continue;
        }

        if is_forced {
            for w in &p.witnesses {
                rows.push(Row {
                    terms: w.tuples.iter().map(|&t| (VarId::Tuple(t), 1)).collect(),
                    sense: Sense::Ge,
                    rhs: 1,
                    tag: Tag::Pc2,
                });
            }
            continue;
        }

        let wvar = |index: usize| VarId::Witness { view: id, index };
        let vvar = |index: usize| VarId::View { view: id, index };

        if opts.fix_forced && !forced_sets.is_empty() {
            for (wi, w) in p.witnesses.iter().enumerate() {
                if forced_sets.iter().any(|f| is_subset(f, &w.tuples)) {
                    fixed.insert(wvar(wi), 1);
                }
            }
            for (vi, v) in p.view_tuples.iter().enumerate() {
                if v.witnesses.iter().all(|&w| fixed.contains_key(&wvar(w))) {
                    fixed.insert(vvar(vi), 1);
                }
            }
        }

        for (wi, w) in p.witnesses.iter().enumerate() {
            meaning.push((wvar(wi), vec![w.tuples.as_slice()]));
        }
        for (vi, v) in p.view_tuples.iter().enumerate() {
            let open = v.witnesses.iter().filter(|&&w| !fixed.contains_key(&wvar(w)));
            meaning.push((vvar(vi), open.map(|&w| p.witnesses[w].tuples.as_slice()).collect()));
        }

        match id.list {
            ViewList::Del => rows.push(Row {
                terms: (0..p.view_tuples.len()).map(|v| (vvar(v), 1)).collect(),
                sense: Sense::Ge,
                rhs: instance.k(id).unwrap() as i64,
                tag: Tag::UcDel,
            }),
            ViewList::Pres => rows.push(Row {
                terms: (0..p.view_tuples.len()).map(|v| (vvar(v), 1)).collect(),
                sense: Sense::Le,
                rhs: (p.view_tuples.len() - instance.k(id).unwrap()) as i64,
                tag: Tag::UcPres,
            }),
            ViewList::Min | ViewList::Max => {
                for (vi, v) in p.view_tuples.iter().enumerate() {
                    // An identity view's answer is a tuple; it weighs m(t).
                    let w = match &view.identity {
                        Some(rel) => db
                            .tuple_weight(&TupleRef::new(rel.clone(), v.values.clone()))
                            .expect("identity answer is a tuple") as i64,
                        None => 1,
                    };
                    *objective.entry(vvar(vi)).or_insert(0) += sign * w;
                }
            }
        }

        for &tag in families(id.list, mode) {
            match tag {
                Tag::Pc1 => {
                    for (wi, w) in p.witnesses.iter().enumerate() {
                        for &t in &w.tuples {
                            rows.push(Row {
                                terms: vec![(VarId::Tuple(t), 1), (wvar(wi), -1)],
                                sense: Sense::Le,
                                rhs: 0,
                                tag: Tag::Pc1,
                            });
                        }
                    }
                }
                Tag::Pc2 => {
                    for (wi, w) in p.witnesses.iter().enumerate() {
                        let mut terms: Vec<(VarId, i64)> = w.tuples.iter().map(|&t| (VarId::Tuple(t), 1)).collect();
                        terms.push((wvar(wi), -1));
                        rows.push(Row { terms, sense: Sense::Ge, rhs: 0, tag: Tag::Pc2 });
                    }
                }
                Tag::Pc3 => {
                    for (vi, v) in p.view_tuples.iter().enumerate() {
                        let mut terms: Vec<(VarId, i64)> = v.witnesses.iter().map(|&w| (wvar(w), 1)).collect();
                        terms.push((vvar(vi), -1));
                        rows.push(Row { terms, sense: Sense::Le, rhs: v.witnesses.len() as i64 - 1, tag: Tag::Pc3 });
                    }
                }
                Tag::Pc4 => {
                    for (vi, v) in p.view_tuples.iter().enumerate() {
                        for &w in &v.witnesses {
                            rows.push(Row {
                                terms: vec![(wvar(w), 1), (vvar(vi), -1)],
                                sense: Sense::Ge,
                                rhs: 0,
                                tag: Tag::Pc4,
                            });
                        }
                    }
                }
                Tag::Sc => {
                    for v in &p.view_tuples {
                        let mut covering: BTreeMap<TupleId, Vec<usize>> = BTreeMap::new();
                        for &w in &v.witnesses {
                            for &t in &p.witnesses[w].tuples {
                                covering.entry(t).or_default().push(w);
                            }
                        }
                        for (t, ws) in covering {
                            // With one covering witness the row is PC1,
                            // which is already emitted.
                            if ws.len() < 2 {
                                continue;
                            }
                            let mut terms = vec![(VarId::Tuple(t), 1)];
                            terms.extend(ws.iter().map(|&w| (wvar(w), -1)));
                            rows.push(Row { terms, sense: Sense::Le, rhs: 1 - ws.len() as i64, tag: Tag::Sc });
                        }
                    }
                }
                Tag::UcDel | Tag::UcPres => unreachable!(),
            }
        }
    }

    // Variables: all tuples, plus every non-fixed witness/view variable.
    let mut ids: Vec<VarId> = (0..tuple_refs.len()).map(|i| VarId::Tuple(TupleId(i as u32))).collect();
    let mut seen: HashSet<VarId> = ids.iter().copied().collect();
    for r in &rows {
        for (v, _) in &r.terms {
            if !fixed.contains_key(v) && seen.insert(*v) {
                ids.push(*v);
            }
        }
    }
    for v in objective.keys() {
        if !fixed.contains_key(v) && seen.insert(*v) {
            ids.push(*v);
        }
    }
    ids.sort();
    let index: HashMap<VarId, usize> = ids.iter().enumerate().map(|(i, v)| (*v, i)).collect();

    let mut offset = 0;
    let mut obj = Vec::new();
    for (v, c) in objective {
        if c == 0 {
            continue;
        }
        match fixed.get(&v) {
            Some(val) => offset += c * val,
            None => obj.push((index[&v], c)),
        }
    }
    obj.sort();

    let constraints = rows
        .into_iter()
        .map(|r| {
            let mut rhs = r.rhs;
            let mut terms = Vec::with_capacity(r.terms.len());
            for (v, c) in r.terms {
                match fixed.get(&v) {
                    Some(val) => rhs -= c * val,
                    None => terms.push((index[&v], c)),
                }
            }
            LinearConstraint { terms, sense: r.sense, rhs, tag: r.tag }
        })
        .collect();

    let implied = meaning
        .into_iter()
        .filter_map(|(v, clauses)| {
            let var = *index.get(&v)?;
            let clauses =
                clauses.iter().map(|c| c.iter().map(|&t| index[&VarId::Tuple(t)]).collect()).collect();
            Some(Implied { var, clauses })
        })
        .collect();
    let model = IlpModel {
        mode,
        variables: ids.into_iter().map(|id| Variable { id, integer: true }).collect(),
        objective: obj,
        offset,
        constraints,
        fixed: fixed.into_iter().collect(),
        tuple_refs,
        implied,
    };
    if opts.prune_subsumed {
        prune_subsumed(&model)
    } else {
        model
    }
}

fn is_subset(small: &[TupleId], big: &[TupleId]) -> bool {
    // both sorted
    let mut it = big.iter();
    small.iter().all(|s| it.any(|b| b == s))
}

/// Same model with every integrality flag cleared.
pub fn lp_relaxation(model: &IlpModel) -> IlpModel {
    let mut m = model.clone();
    for v in &mut m.variables {
        v.integer = false;
    }
    m
}

/// Removes each PC1 row `X[t] − X[w] ≤ 0` for which an SC row with at
/// least two witness terms covers the same tuple and witness. Such an SC
/// row implies the PC1 row on [0,1]^n, so both optima are unchanged.
pub fn prune_subsumed(model: &IlpModel) -> IlpModel {
    let mut covered: HashSet<(usize, usize)> = HashSet::new();
    for c in model.constraints.iter().filter(|c| c.tag == Tag::Sc) {
        let Some(&(t, _)) = c.terms.iter().find(|&&(_, coef)| coef == 1) else { continue };
        let ws: Vec<usize> = c.terms.iter().filter(|&&(_, coef)| coef == -1).map(|&(j, _)| j).collect();
        if ws.len() >= 2 {
            covered.extend(ws.into_iter().map(|w| (t, w)));
        }
    }
    let mut m = model.clone();
    m.constraints.retain(|c| {
        if c.tag != Tag::Pc1 {
            return true;
        }
        let t = c.terms.iter().find(|&&(_, coef)| coef == 1).map(|&(j, _)| j);
        let w = c.terms.iter().find(|&&(_, coef)| coef == -1).map(|&(j, _)| j);
        match (t, w) {
            (Some(t), Some(w)) => !covered.contains(&(t, w)),
            _ => true,
        }
    });
    m
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ModelStats {
    pub variables: usize,
    pub tuple_vars: usize,
    pub witness_vars: usize,
    pub view_vars: usize,
    pub integer_vars: usize,
    pub constraints: usize,
    pub by_tag: BTreeMap<&'static str, usize>,
    pub nonzeros: usize,
    pub fixed: usize,
}

pub fn model_stats(model: &IlpModel) -> ModelStats {
    let mut s = ModelStats {
        variables: model.num_vars(),
        constraints: model.constraints.len(),
        fixed: model.fixed.len(),
        ..Default::default()
    };
    for t in Tag::ALL {
        s.by_tag.insert(t.as_str(), 0);
    }
    for v in &model.variables {
        match v.id {
            VarId::Tuple(_) => s.tuple_vars += 1,
            VarId::Witness { .. } => s.witness_vars += 1,
            VarId::View { .. } => s.view_vars += 1,
        }
        s.integer_vars += usize::from(v.integer);
    }
    for c in &model.constraints {
        *s.by_tag.get_mut(c.tag.as_str()).unwrap() += 1;
        s.nonzeros += c.terms.len();
    }
    s
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::gdp::{make_dpss, make_swp};
    use crate::query::parse_query;
    use crate::relcore::{Database, Semantics, Value};

    pub(crate) fn shared_db() -> Database {
        Database::builder(Semantics::Set)
            .relation("R", 2)
            .unwrap()
            .relation("S", 1)
            .unwrap()
            .row("R", vec![1.into(), 1.into()])
            .unwrap()
            .row("R", vec![1.into(), 2.into()])
            .unwrap()
            .row("S", vec![1.into()])
            .unwrap()
            .build()
    }

    pub(crate) fn shared_swp() -> GdpInstance {
        let q = parse_query("Qpres(x) :- R(x,y), S(x).").unwrap();
        make_swp(&shared_db(), &q).unwrap()
    }

    fn tuple(m: &IlpModel, rel: &str, vals: &[i64]) -> usize {
        let t = TupleRef::new(rel, vals.iter().map(|&v| Value::Int(v)).collect());
        let id = m.tuple_refs.iter().position(|r| *r == t).unwrap();
        m.var_index(&VarId::Tuple(TupleId(id as u32))).unwrap()
    }

    #[test]
    fn shared_db_smoothed_rows() {
        let m = build(&shared_swp(), Mode::Smoothed).unwrap();
        let s = model_stats(&m);
        assert_eq!(s.by_tag["uc_pres"], 1);
        assert_eq!(s.by_tag["pc3"], 1);
        assert_eq!(s.by_tag["sc"], 1);
        assert_eq!(s.by_tag["pc1"], 2);
        assert_eq!(s.constraints, 5);

        let r11 = tuple(&m, "R", &[1, 1]);
        let r12 = tuple(&m, "R", &[1, 2]);
        let s1 = tuple(&m, "S", &[1]);
        assert_eq!(m.objective, vec![(r11, -1), (r12, -1), (s1, -1)]);

        let uc = m.constraints.iter().find(|c| c.tag == Tag::UcPres).unwrap();
        assert_eq!((uc.terms.len(), uc.sense, uc.rhs), (1, Sense::Le, 0));
        let sc = m.constraints.iter().find(|c| c.tag == Tag::Sc).unwrap();
        assert_eq!(sc.terms[0], (s1, 1));
        assert_eq!(sc.terms.len(), 3);
        assert_eq!(sc.rhs, -1);
        let pc1_tuples: Vec<usize> =
            m.constraints.iter().filter(|c| c.tag == Tag::Pc1).map(|c| c.terms[0].0).collect();
        assert_eq!(pc1_tuples, [r11, r12]);
    }

    #[test]
    fn unpruned_smoothed_keeps_pc1_on_shared_tuple() {
        let opts = BuildOptions { prune_subsumed: false, ..Default::default() };
        let m = build_with(&shared_swp(), Mode::Smoothed, opts).unwrap();
        assert_eq!(model_stats(&m).by_tag["pc1"], 4);
        let pruned = prune_subsumed(&m);
        assert_eq!(model_stats(&pruned).by_tag["pc1"], 2);
        let naive = build(&shared_swp(), Mode::Naive).unwrap();
        assert_eq!(prune_subsumed(&naive), naive);
    }

    #[test]
    fn empty_instance_empty_model() {
        let db = Database::builder(Semantics::Set).build();
        let inst = GdpInstance::new(db, vec![], vec![], vec![], vec![]).unwrap();
        let m = build(&inst, Mode::Smoothed).unwrap();
        assert_eq!(model_stats(&m), ModelStats { by_tag: model_stats(&m).by_tag, ..Default::default() });
        assert!(m.objective.is_empty() && m.constraints.is_empty());
        assert!(model_stats(&m).by_tag.values().all(|&n| n == 0));
    }

    #[test]
    fn wildcard_is_a_subset_of_naive() {
        let inst = shared_swp();
        let n = model_stats(&build(&inst, Mode::Naive).unwrap());
        let w = model_stats(&build(&inst, Mode::Wildcard).unwrap());
        assert!(w.constraints <= n.constraints);
    }

    #[test]
    fn forced_delete_view_becomes_covering_rows() {
        let q = parse_query("Q(x) :- R(x,y), S(x).").unwrap();
        let inst = make_dpss(&shared_db(), &q, &[Value::Int(1)]).unwrap();
        for mode in Mode::ALL {
            let m = build(&inst, mode).unwrap();
            let s = model_stats(&m);
            assert_eq!(s.constraints, 2, "{mode}");
            assert_eq!(s.by_tag["pc2"], 2);
            assert_eq!(s.witness_vars + s.view_vars, 0);
            assert!(m.constraints.iter().all(|c| c.sense == Sense::Ge && c.rhs == 1));
            assert!(m.objective.iter().all(|&(_, c)| c == 1));
            assert_eq!(m.objective.len(), 3);
        }
    }

    #[test]
    fn identity_views_without_collapse_get_variables() {
        let opts = BuildOptions { collapse_identity: false, ..Default::default() };
        let m = build_with(&shared_swp(), Mode::Smoothed, opts).unwrap();
        let s = model_stats(&m);
        // three identity witnesses and answers for the max views
        assert_eq!(s.witness_vars, 2 + 3);
        assert_eq!(s.view_vars, 1 + 3);
        assert_eq!(s.by_tag["pc2"], 3);
        assert_eq!(s.by_tag["pc4"], 3);
        assert!(m.objective.iter().all(|&(j, c)| c == -1 && matches!(m.variables[j].id, VarId::View { .. })));
    }

    #[test]
    fn relaxation_clears_integrality() {
        let m = build(&shared_swp(), Mode::Naive).unwrap();
        assert!(m.is_integer_program());
        let r = lp_relaxation(&m);
        assert!(r.variables.iter().all(|v| !v.integer));
        assert_eq!(lp_relaxation(&r), r);
    }

    #[test]
    fn build_is_deterministic() {
        let a = build(&shared_swp(), Mode::Naive).unwrap();
        let b = build(&shared_swp(), Mode::Naive).unwrap();
        assert_eq!(a, b);
    }
}
