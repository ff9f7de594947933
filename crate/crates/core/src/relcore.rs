//! Relational data model: typed constants, relations of distinct rows with
//! multiplicities, and flat-file ingestion (JSON manifest + one CSV per
//! relation).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A database constant. Tokens that parse as decimal integers become
/// `Int`, everything else is a `Str`; the two never compare equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Str(String),
}

impl Value {
    /// Types a raw token the way CSV ingestion does.
    pub fn parse_token(token: &str) -> Value {
        match token.parse::<i64>() {
            Ok(i) => Value::Int(i),
            Err(_) => Value::Str(token.to_string()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => write!(f, "'{s}'"),
        }
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_string())
    }
}

/// A reference to one distinct input tuple.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TupleRef {
    pub relation: String,
    pub values: Vec<Value>,
}

impl TupleRef {
    pub fn new(relation: impl Into<String>, values: Vec<Value>) -> Self {
        TupleRef { relation: relation.into(), values }
    }
}

impl fmt::Display for TupleRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

/// Position of a tuple in the database's canonical order (relations in
/// declaration order, rows sorted within a relation).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TupleId(pub u32);

impl TupleId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    #[default]
    Set,
    Bag,
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Semantics::Set => "set",
            Semantics::Bag => "bag",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    name: String,
    arity: usize,
    rows: BTreeMap<Vec<Value>, u64>,
}

impl Relation {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct rows in sorted order together with their multiplicities.
    pub fn rows(&self) -> impl Iterator<Item = (&[Value], u64)> {
        self.rows.iter().map(|(k, &m)| (k.as_slice(), m))
    }

    pub fn multiplicity(&self, values: &[Value]) -> Option<u64> {
        self.rows.get(values).copied()
    }
}

#[derive(Debug, Error)]
pub enum DbError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{file}:{line}: {message}")]
    Ingest { file: PathBuf, line: usize, message: String },
    #[error("relation `{0}` declared twice")]
    DuplicateRelation(String),
    #[error("relation `{name}` must have positive arity")]
    ZeroArity { name: String },
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("tuple {tuple} has arity {got}, relation expects {expected}")]
    ArityMismatch { tuple: TupleRef, expected: usize, got: usize },
    #[error("multiplicity of {0} must be at least 1")]
    ZeroMultiplicity(TupleRef),
    #[error("set semantics forbids multiplicity {count} for {tuple}")]
    SetMultiplicity { tuple: TupleRef, count: u64 },
    #[error("tuple {0} is not in the database")]
    MissingTuple(TupleRef),
}

/// A named collection of relations under set or bag semantics.
///
/// Immutable once built; deletions return a new database.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Database {
    semantics: Semantics,
    relations: Vec<Relation>,
    by_name: HashMap<String, usize>,
    offsets: Vec<usize>,
}

impl Database {
    pub fn builder(semantics: Semantics) -> DatabaseBuilder {
        DatabaseBuilder { semantics, relations: Vec::new(), by_name: HashMap::new() }
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    /// Relations in declaration (manifest) order.
    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.by_name.get(name).map(|&i| &self.relations[i])
    }

    /// Number of distinct tuples across all relations.
    pub fn tuple_count(&self) -> usize {
        self.offsets.last().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.tuple_count() == 0
    }

    pub fn contains(&self, t: &TupleRef) -> bool {
        self.relation(&t.relation).and_then(|r| r.multiplicity(&t.values)).is_some()
    }

    /// Distinct tuples in canonical order; the position is the `TupleId`.
    pub fn tuples(&self) -> impl Iterator<Item = (TupleId, TupleRef, u64)> + '_ {
        self.relations
            .iter()
            .flat_map(|r| r.rows().map(move |(vals, m)| (TupleRef::new(r.name.clone(), vals.to_vec()), m)))
            .enumerate()
            .map(|(i, (t, m))| (TupleId(i as u32), t, m))
    }

    /// Id of the first row of `relation` in canonical order.
    pub(crate) fn relation_offset(&self, relation: &str) -> Option<usize> {
        self.by_name.get(relation).map(|&i| self.offsets[i])
    }

    pub fn tuple_id(&self, t: &TupleRef) -> Option<TupleId> {
        let ri = *self.by_name.get(&t.relation)?;
        let rel = &self.relations[ri];
        let pos = rel.rows.range::<Vec<Value>, _>(..&t.values).count();
        rel.rows.contains_key(&t.values).then(|| TupleId((self.offsets[ri] + pos) as u32))
    }

    pub fn tuple_ref(&self, id: TupleId) -> TupleRef {
        let idx = id.index();
        let ri = match self.offsets.binary_search(&idx) {
            Ok(mut i) => {
                // skip empty relations sharing this offset
                while self.relations[i].is_empty() {
                    i += 1;
                }
                i
            }
            Err(i) => i - 1,
        };
        let rel = &self.relations[ri];
        let (vals, _) = rel.rows.iter().nth(idx - self.offsets[ri]).expect("tuple id in range");
        TupleRef::new(rel.name.clone(), vals.clone())
    }

    /// Multiplicity of `t`; always 1 under set semantics.
    pub fn tuple_weight(&self, t: &TupleRef) -> Result<u64, DbError> {
        self.relation(&t.relation)
            .and_then(|r| r.multiplicity(&t.values))
            .ok_or_else(|| DbError::MissingTuple(t.clone()))
    }

    /// Removes every tuple of `gamma` entirely (all copies).
    pub fn delete_tuples<'a, I>(&self, gamma: I) -> Result<Database, DbError>
    where
        I: IntoIterator<Item = &'a TupleRef>,
    {
        let mut next = self.clone();
        for t in gamma {
            let ri = *self.by_name.get(&t.relation).ok_or_else(|| DbError::MissingTuple(t.clone()))?;
            if next.relations[ri].rows.remove(&t.values).is_none() && !self.contains(t) {
                return Err(DbError::MissingTuple(t.clone()));
            }
        }
        next.recompute_offsets();
        Ok(next)
    }

    /// Like `delete_tuples` but addressed by id; ids refer to `self`.
    pub fn delete_ids(&self, gamma: &BTreeSet<TupleId>) -> Database {
        let refs: Vec<TupleRef> = gamma.iter().map(|&id| self.tuple_ref(id)).collect();
        self.delete_tuples(refs.iter()).expect("ids come from this database")
    }

    fn recompute_offsets(&mut self) {
        let mut acc = 0;
        self.offsets = Vec::with_capacity(self.relations.len() + 1);
        for r in &self.relations {
            self.offsets.push(acc);
            acc += r.rows.len();
        }
        self.offsets.push(acc);
    }
}

pub struct DatabaseBuilder {
    semantics: Semantics,
    relations: Vec<Relation>,
    by_name: HashMap<String, usize>,
}

impl DatabaseBuilder {
    pub fn relation(mut self, name: &str, arity: usize) -> Result<Self, DbError> {
        self.add_relation(name, arity)?;
        Ok(self)
    }

    pub fn add_relation(&mut self, name: &str, arity: usize) -> Result<(), DbError> {
        if arity == 0 {
            return Err(DbError::ZeroArity { name: name.to_string() });
        }
        if self.by_name.contains_key(name) {
            return Err(DbError::DuplicateRelation(name.to_string()));
        }
        self.by_name.insert(name.to_string(), self.relations.len());
        self.relations.push(Relation { name: name.to_string(), arity, rows: BTreeMap::new() });
        Ok(())
    }

    pub fn row(mut self, relation: &str, values: Vec<Value>) -> Result<Self, DbError> {
        self.insert(relation, values, 1)?;
        Ok(self)
    }

    /// Adds `count` copies. Bag semantics accumulates, set semantics
    /// collapses duplicates to a single row.
    pub fn insert(&mut self, relation: &str, values: Vec<Value>, count: u64) -> Result<(), DbError> {
        let ri = *self.by_name.get(relation).ok_or_else(|| DbError::UnknownRelation(relation.to_string()))?;
        let rel = &mut self.relations[ri];
        if values.len() != rel.arity {
            return Err(DbError::ArityMismatch {
                expected: rel.arity,
                got: values.len(),
                tuple: TupleRef::new(relation, values),
            });
        }
        if count == 0 {
            return Err(DbError::ZeroMultiplicity(TupleRef::new(relation, values)));
        }
        match self.semantics {
            Semantics::Set => {
                if count != 1 {
                    return Err(DbError::SetMultiplicity { tuple: TupleRef::new(relation, values), count });
                }
                rel.rows.insert(values, 1);
            }
            Semantics::Bag => *rel.rows.entry(values).or_insert(0) += count,
        }
        Ok(())
    }

    pub fn build(self) -> Database {
        let mut db = Database {
            semantics: self.semantics,
            relations: self.relations,
            by_name: self.by_name,
            offsets: Vec::new(),
        };
        db.recompute_offsets();
        db
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub semantics: Semantics,
    pub relations: Vec<ManifestRelation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestRelation {
    pub name: String,
    pub arity: usize,
    pub file: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub count_column: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Skip the first line of every CSV file.
    pub header: bool,
}

pub fn load_database(manifest_path: &Path) -> Result<Database, DbError> {
    load_database_with(manifest_path, LoadOptions::default())
}

pub fn load_database_with(manifest_path: &Path, opts: LoadOptions) -> Result<Database, DbError> {
    let text = fs::read_to_string(manifest_path)
        .map_err(|source| DbError::Io { path: manifest_path.to_path_buf(), source })?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| DbError::Manifest { path: manifest_path.to_path_buf(), message: e.to_string() })?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut builder = Database::builder(manifest.semantics);
    for rel in &manifest.relations {
        builder.add_relation(&rel.name, rel.arity)?;
    }
    for rel in &manifest.relations {
        let path = base.join(&rel.file);
        ingest_csv(&mut builder, rel, &path, opts)?;
    }
    Ok(builder.build())
}

fn ingest_csv(
    builder: &mut DatabaseBuilder,
    rel: &ManifestRelation,
    path: &Path,
    opts: LoadOptions,
) -> Result<(), DbError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_io(path, e))?;
    let expected = rel.arity + usize::from(rel.count_column);
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_io(path, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(i + 1);
        let ingest = |message: String| DbError::Ingest { file: path.to_path_buf(), line, message };
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() != expected {
            return Err(ingest(format!(
                "expected {expected} columns for {}/{}{}, found {}",
                rel.name,
                rel.arity,
                if rel.count_column { " plus _count" } else { "" },
                record.len()
            )));
        }
        let values: Vec<Value> = record.iter().take(rel.arity).map(Value::parse_token).collect();
        let count = if rel.count_column {
            let raw = &record[rel.arity];
            let c: i64 = raw.parse().map_err(|_| ingest(format!("invalid _count `{raw}`")))?;
            if c < 1 {
                return Err(ingest(format!("_count must be at least 1, found {c}")));
            }
            c as u64
        } else {
            1
        };
        match builder.semantics {
            Semantics::Set if count != 1 => {
                return Err(ingest(format!("set semantics requires _count = 1, found {count}")));
            }
            Semantics::Set if builder.relations[builder.by_name[&rel.name]].rows.contains_key(&values) => {}
            _ => builder.insert(&rel.name, values, count).map_err(|e| ingest(e.to_string()))?,
        }
    }
    Ok(())
}

fn csv_io(path: &Path, e: csv::Error) -> DbError {
    let message = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(source) => DbError::Io { path: path.to_path_buf(), source },
        _ => DbError::Ingest { file: path.to_path_buf(), line: 0, message },
    }
}

/// Writes `db` as a manifest plus one CSV per relation into `dir`. Bag
/// databases get a `_count` column.
pub fn write_database(db: &Database, dir: &Path) -> Result<PathBuf, DbError> {
    fs::create_dir_all(dir).map_err(|source| DbError::Io { path: dir.to_path_buf(), source })?;
    let bag = db.semantics == Semantics::Bag;
    let mut entries = Vec::new();
    for rel in db.relations() {
        let file = format!("{}.csv", rel.name());
        let path = dir.join(&file);
        let mut out = String::new();
        for (vals, m) in rel.rows() {
            let mut fields: Vec<String> = vals.iter().map(csv_token).collect();
            if bag {
                fields.push(m.to_string());
            }
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        fs::write(&path, out).map_err(|source| DbError::Io { path: path.clone(), source })?;
        entries.push(ManifestRelation { name: rel.name().to_string(), arity: rel.arity(), file, count_column: bag });
    }
    let manifest = Manifest { semantics: db.semantics(), relations: entries };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|source| DbError::Io { path: path.clone(), source })?;
    Ok(path)
}

fn csv_token(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Str(s) if s.contains(',') || s.contains('"') => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::Str(s) => s.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_db() -> Database {
        Database::builder(Semantics::Set)
            .relation("R", 2)
            .unwrap()
            .relation("S", 2)
            .unwrap()
            .row("R", vec![1.into(), 2.into()])
            .unwrap()
            .row("R", vec![2.into(), 2.into()])
            .unwrap()
            .row("S", vec![2.into(), 3.into()])
            .unwrap()
            .build()
    }

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    #[test]
    fn loads_manifest_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "R.csv", "1,2\n2,2\n");
        write(dir.path(), "S.csv", "2,3\n");
        write(
            dir.path(),
            "m.json",
            r#"{"semantics":"set","relations":[{"name":"R","arity":2,"file":"R.csv"},{"name":"S","arity":2,"file":"S.csv"}]}"#,
        );
        let db = load_database(&dir.path().join("m.json")).unwrap();
        assert_eq!(db.relation("R").unwrap().len(), 2);
        assert_eq!(db.relation("S").unwrap().len(), 1);
        assert_eq!(db, chain_db());
    }

    #[test]
    fn empty_csv_gives_empty_relation() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "R.csv", "");
        write(dir.path(), "m.json", r#"{"semantics":"set","relations":[{"name":"R","arity":2,"file":"R.csv"}]}"#);
        let db = load_database(&dir.path().join("m.json")).unwrap();
        assert!(db.relation("R").unwrap().is_empty());
        assert_eq!(db.tuple_count(), 0);
    }

    #[test]
    fn bag_counts_accumulate() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "R.csv", "1,1,3\n2,1,1\n2,1,2\n");
        write(
            dir.path(),
            "m.json",
            r#"{"semantics":"bag","relations":[{"name":"R","arity":2,"file":"R.csv","count_column":true}]}"#,
        );
        let db = load_database(&dir.path().join("m.json")).unwrap();
        let t = |a, b| TupleRef::new("R", vec![Value::Int(a), Value::Int(b)]);
        assert_eq!(db.tuple_weight(&t(1, 1)).unwrap(), 3);
        assert_eq!(db.tuple_weight(&t(2, 1)).unwrap(), 3);
    }

    #[test]
    fn set_duplicates_collapse() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "R.csv", "1,1\n1,1\n");
        write(dir.path(), "m.json", r#"{"semantics":"set","relations":[{"name":"R","arity":2,"file":"R.csv"}]}"#);
        let db = load_database(&dir.path().join("m.json")).unwrap();
        assert_eq!(db.tuple_count(), 1);
        assert_eq!(db.tuple_weight(&TupleRef::new("R", vec![1.into(), 1.into()])).unwrap(), 1);
    }

    #[test]
    fn ingestion_errors() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "R.csv", "1,2\n3\n");
        write(dir.path(), "m.json", r#"{"semantics":"set","relations":[{"name":"R","arity":2,"file":"R.csv"}]}"#);
        let err = load_database(&dir.path().join("m.json")).unwrap_err();
        match err {
            DbError::Ingest { file, line, .. } => {
                assert!(file.ends_with("R.csv"));
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }

        write(dir.path(), "B.csv", "1,0\n");
        write(
            dir.path(),
            "b.json",
            r#"{"semantics":"bag","relations":[{"name":"B","arity":1,"file":"B.csv","count_column":true}]}"#,
        );
        assert!(matches!(load_database(&dir.path().join("b.json")), Err(DbError::Ingest { .. })));

        write(dir.path(), "C.csv", "1,2\n");
        write(
            dir.path(),
            "c.json",
            r#"{"semantics":"set","relations":[{"name":"C","arity":1,"file":"C.csv","count_column":true}]}"#,
        );
        assert!(matches!(load_database(&dir.path().join("c.json")), Err(DbError::Ingest { .. })));
    }

    #[test]
    fn header_flag_skips_first_line() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "R.csv", "a,b\n1,2\n");
        write(dir.path(), "m.json", r#"{"semantics":"set","relations":[{"name":"R","arity":2,"file":"R.csv"}]}"#);
        let db = load_database_with(&dir.path().join("m.json"), LoadOptions { header: true }).unwrap();
        assert_eq!(db.tuple_count(), 1);
    }

    #[test]
    fn strings_and_ints_are_typed() {
        assert_eq!(Value::parse_token("42"), Value::Int(42));
        assert_eq!(Value::parse_token("-7"), Value::Int(-7));
        assert_eq!(Value::parse_token("BOS"), Value::Str("BOS".into()));
        assert_ne!(Value::parse_token("1"), Value::Str("1".into()));
    }

    #[test]
    fn delete_tuples_contract() {
        let db = chain_db();
        let r12 = TupleRef::new("R", vec![1.into(), 2.into()]);
        let after = db.delete_tuples([&r12]).unwrap();
        assert_eq!(after.tuple_count(), 2);
        assert!(!after.contains(&r12));
        assert!(db.contains(&r12), "input untouched");

        assert_eq!(db.delete_tuples(std::iter::empty()).unwrap(), db);

        let again = after.delete_tuples([&r12]);
        assert!(matches!(again, Err(DbError::MissingTuple(_))));
    }

    #[test]
    fn bag_delete_removes_all_copies() {
        let mut b = Database::builder(Semantics::Bag).relation("R", 2).unwrap();
        b.insert("R", vec![1.into(), 1.into()], 3).unwrap();
        let db = b.build();
        let t = TupleRef::new("R", vec![1.into(), 1.into()]);
        assert_eq!(db.tuple_weight(&t).unwrap(), 3);
        let after = db.delete_tuples([&t]).unwrap();
        assert!(after.relation("R").unwrap().is_empty());
    }

    #[test]
    fn tuple_weight_is_one_under_set() {
        let db = chain_db();
        for (_, t, _) in db.tuples() {
            assert_eq!(db.tuple_weight(&t).unwrap(), 1);
        }
        assert!(db.tuple_weight(&TupleRef::new("S", vec![9.into(), 9.into()])).is_err());
    }

    #[test]
    fn ids_round_trip() {
        let mut b = Database::builder(Semantics::Set);
        b.add_relation("E", 1).unwrap();
        b.add_relation("R", 2).unwrap();
        b.add_relation("F", 1).unwrap();
        b.add_relation("S", 1).unwrap();
        b.insert("R", vec![2.into(), 1.into()], 1).unwrap();
        b.insert("R", vec![1.into(), 5.into()], 1).unwrap();
        b.insert("S", vec!["x".into()], 1).unwrap();
        let db = b.build();
        for (id, t, _) in db.tuples() {
            assert_eq!(db.tuple_id(&t), Some(id));
            assert_eq!(db.tuple_ref(id), t);
        }
    }

    #[test]
    fn write_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = Database::builder(Semantics::Bag).relation("R", 2).unwrap().relation("N", 1).unwrap();
        b.insert("R", vec![1.into(), "a,b".into()], 2).unwrap();
        b.insert("R", vec![3.into(), "c".into()], 1).unwrap();
        b.insert("N", vec![7.into()], 5).unwrap();
        let db = b.build();
        let manifest = write_database(&db, dir.path()).unwrap();
        assert_eq!(load_database(&manifest).unwrap(), db);
    }
}
