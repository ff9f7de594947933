//! Union-of-conjunctive-queries IR, its text syntax, and derived forms.
//!
//! Syntax: one or more rules `Name(v1,..,vk) :- R(t,..), S(t,..).` sharing
//! a head name and arity. Bare identifiers in the body are variables,
//! integers and single-quoted strings are constants, `#` starts a comment.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::relcore::{Database, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Const(Value),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub relation: String,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(relation: &str, terms: Vec<Term>) -> Atom {
        Atom { relation: relation.to_string(), terms }
    }

    /// Distinct variables of the atom in order of first occurrence.
    pub fn vars(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for t in &self.terms {
            if let Some(v) = t.as_var() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    pub fn var_set(&self) -> BTreeSet<&str> {
        self.terms.iter().filter_map(Term::as_var).collect()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub head: Vec<String>,
    pub body: Vec<Atom>,
}

impl Rule {
    /// All distinct variables: head variables first, then body variables
    /// in order of first occurrence. Witness valuations use this order.
    pub fn variables(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        let body = self.body.iter().flat_map(|a| a.terms.iter().filter_map(Term::as_var));
        for v in self.head.iter().map(String::as_str).chain(body) {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    pub fn head_set(&self) -> BTreeSet<&str> {
        self.head.iter().map(String::as_str).collect()
    }

    pub fn is_boolean(&self) -> bool {
        self.head.is_empty()
    }

    fn check_safe(&self) -> Result<(), String> {
        let body: BTreeSet<&str> = self.body.iter().flat_map(|a| a.terms.iter().filter_map(Term::as_var)).collect();
        match self.head.iter().find(|h| !body.contains(h.as_str())) {
            Some(v) => Err(v.clone()),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub name: String,
    pub rules: Vec<Rule>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("{line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unsafe rule {rule}: head variable `{var}` does not occur in the body")]
    Unsafe { rule: usize, var: String },
    #[error("rule {rule} has head {found}, expected {expected}")]
    HeadMismatch { rule: usize, expected: String, found: String },
    #[error("query text contains no rules")]
    Empty,
    #[error("expected {expected} head constants, got {got}")]
    BindArity { expected: usize, got: usize },
    #[error("no rule of `{0}` can produce the requested head constants")]
    BindUnsatisfiable(String),
}

impl Query {
    /// Builds a query and checks safety and head-arity consistency.
    pub fn new(name: &str, rules: Vec<Rule>) -> Result<Query, QueryError> {
        if rules.is_empty() {
            return Err(QueryError::Empty);
        }
        let arity = rules[0].head.len();
        for (i, r) in rules.iter().enumerate() {
            if r.body.is_empty() {
                return Err(QueryError::Syntax { line: 0, col: 0, message: format!("rule {i} has an empty body") });
            }
            if r.head.len() != arity {
                return Err(QueryError::HeadMismatch {
                    rule: i,
                    expected: format!("{name}/{arity}"),
                    found: format!("{name}/{}", r.head.len()),
                });
            }
            r.check_safe().map_err(|var| QueryError::Unsafe { rule: i, var })?;
        }
        Ok(Query { name: name.to_string(), rules })
    }

    /// Arity of the first rule's head; all rules agree except in full
    /// versions of unions.
    pub fn head_arity(&self) -> usize {
        self.rules[0].head.len()
    }

    pub fn is_boolean(&self) -> bool {
        self.rules.iter().all(Rule::is_boolean)
    }

    /// Relation symbols in order of first occurrence.
    pub fn relations(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for a in self.rules.iter().flat_map(|r| &r.body) {
            if !out.contains(&a.relation.as_str()) {
                out.push(&a.relation);
            }
        }
        out
    }

    /// Single rule whose atoms use pairwise distinct relation symbols.
    pub fn is_self_join_free_cq(&self) -> bool {
        self.rules.len() == 1 && {
            let body = &self.rules[0].body;
            body.iter().map(|a| &a.relation).collect::<BTreeSet<_>>().len() == body.len()
        }
    }

    /// `Some(R)` when the query is `Q(x1..xk) :- R(x1..xk)` with distinct
    /// variables, i.e. it selects every tuple of `R` unchanged.
    pub fn identity_relation(&self) -> Option<&str> {
        let [rule] = self.rules.as_slice() else { return None };
        let [atom] = rule.body.as_slice() else { return None };
        let vars: Vec<&str> = atom.terms.iter().map(Term::as_var).collect::<Option<_>>()?;
        let distinct = vars.iter().collect::<BTreeSet<_>>().len() == vars.len();
        let same = rule.head.iter().map(String::as_str).eq(vars.iter().copied());
        (distinct && same).then_some(atom.relation.as_str())
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.rules.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{}({}) :- ", self.name, r.head.join(","))?;
            for (j, a) in r.body.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(".")?;
        }
        Ok(())
    }
}

pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut name: Option<String> = None;
    let mut rules = Vec::new();
    while !p.at_end() {
        let (head_name, head_pos) = p.ident("query name")?;
        let head_terms = p.term_list()?;
        let mut head = Vec::with_capacity(head_terms.len());
        for (t, at) in head_terms {
            match t {
                Term::Var(v) => head.push(v),
                Term::Const(c) => return Err(syntax(at, format!("head position holds constant {c}; heads take variables"))),
            }
        }
        match &name {
            None => name = Some(head_name),
            Some(n) if *n != head_name => {
                return Err(syntax(head_pos, format!("rule head `{head_name}` differs from `{n}`")));
            }
            Some(_) => {}
        }
        p.expect(Tok::Implies, "`:-`")?;
        let mut body = Vec::new();
        loop {
            let (rel, _) = p.ident("relation name")?;
            let terms = p.term_list()?.into_iter().map(|(t, _)| t).collect();
            body.push(Atom { relation: rel, terms });
            match p.next() {
                Some((Tok::Comma, _)) => continue,
                Some((Tok::Dot, _)) => break,
                Some((t, at)) => return Err(syntax(at, format!("expected `,` or `.`, found {t}"))),
                None => return Err(p.eof("`,` or `.`")),
            }
        }
        rules.push(Rule { head, body });
    }
    let name = name.ok_or(QueryError::Empty)?;
    let q = Query::new(&name, rules)?;
    check_relation_arities(&q)?;
    Ok(q)
}

fn check_relation_arities(q: &Query) -> Result<(), QueryError> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for a in q.rules.iter().flat_map(|r| &r.body) {
        let n = *seen.entry(&a.relation).or_insert(a.terms.len());
        if n != a.terms.len() {
            return Err(QueryError::Syntax {
                line: 0,
                col: 0,
                message: format!("relation `{}` used with arities {n} and {}", a.relation, a.terms.len()),
            });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Implies,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(i) => write!(f, "integer {i}"),
            Tok::Str(s) => write!(f, "string '{s}'"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Implies => f.write_str("`:-`"),
        }
    }
}

type Pos = (usize, usize);

fn syntax(at: Pos, message: String) -> QueryError {
    QueryError::Syntax { line: at.0, col: at.1, message }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, QueryError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let at = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(1, &mut i, &mut col),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                out.push((Tok::LParen, at));
                advance(1, &mut i, &mut col);
            }
            ')' => {
                out.push((Tok::RParen, at));
                advance(1, &mut i, &mut col);
            }
            ',' => {
                out.push((Tok::Comma, at));
                advance(1, &mut i, &mut col);
            }
            '.' => {
                out.push((Tok::Dot, at));
                advance(1, &mut i, &mut col);
            }
            ':' if chars.get(i + 1) == Some(&'-') => {
                out.push((Tok::Implies, at));
                advance(2, &mut i, &mut col);
            }
            '\'' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '\'' && chars[j] != '\n' {
                    j += 1;
                }
                if j >= chars.len() || chars[j] != '\'' {
                    return Err(syntax(at, "unterminated string constant".into()));
                }
                out.push((Tok::Str(chars[start..j].iter().collect()), at));
                advance(j + 1 - i, &mut i, &mut col);
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) => {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                let v = s.parse::<i64>().map_err(|_| syntax(at, format!("integer `{s}` out of range")))?;
                out.push((Tok::Int(v), at));
                advance(j - i, &mut i, &mut col);
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                out.push((Tok::Ident(chars[i..j].iter().collect()), at));
                advance(j - i, &mut i, &mut col);
            }
            other => return Err(syntax(at, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, Pos)>,
    pos: usize,
}

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn next(&mut self) -> Option<(Tok, Pos)> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eof(&self, expected: &str) -> QueryError {
        let at = self.tokens.last().map(|t| t.1).unwrap_or((1, 1));
        syntax(at, format!("unexpected end of input, expected {expected}"))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Pos, QueryError> {
        match self.next() {
            Some((t, at)) if t == tok => Ok(at),
            Some((t, at)) => Err(syntax(at, format!("expected {what}, found {t}"))),
            None => Err(self.eof(what)),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), QueryError> {
        match self.next() {
            Some((Tok::Ident(s), at)) => Ok((s, at)),
            Some((t, at)) => Err(syntax(at, format!("expected {what}, found {t}"))),
            None => Err(self.eof(what)),
        }
    }

    /// `( term, ... )` or `()`.
    fn term_list(&mut self) -> Result<Vec<(Term, Pos)>, QueryError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut out = Vec::new();
        if let Some((Tok::RParen, _)) = self.tokens.get(self.pos) {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            let term = match self.next() {
                Some((Tok::Ident(s), at)) => (Term::Var(s), at),
                Some((Tok::Int(i), at)) => (Term::Const(Value::Int(i)), at),
                Some((Tok::Str(s), at)) => (Term::Const(Value::Str(s)), at),
                Some((t, at)) => return Err(syntax(at, format!("expected a term, found {t}"))),
                None => return Err(self.eof("a term")),
            };
            out.push(term);
            match self.next() {
                Some((Tok::Comma, _)) => continue,
                Some((Tok::RParen, _)) => return Ok(out),
                Some((t, at)) => return Err(syntax(at, format!("expected `,` or `)`, found {t}"))),
                None => return Err(self.eof("`,` or `)`")),
            }
        }
    }
}

/// Q^F: every rule's head becomes all of its variables (original head
/// variables first). Rules of a union may end up with different arities.
pub fn full_query(q: &Query) -> Query {
    let rules = q
        .rules
        .iter()
        .map(|r| Rule { head: r.variables().into_iter().map(str::to_string).collect(), body: r.body.clone() })
        .collect();
    Query { name: q.name.clone(), rules }
}

/// Q^E: the Boolean query over the same bodies.
pub fn existential_query(q: &Query) -> Query {
    let rules = q.rules.iter().map(|r| Rule { head: Vec::new(), body: r.body.clone() }).collect();
    Query { name: q.name.clone(), rules }
}

/// Substitutes `constants` for the head variables in every rule, giving a
/// Boolean query true exactly when `constants` is an answer of `q`.
/// Rules whose repeated head variables would need two different constants
/// cannot produce the answer and are dropped.
pub fn bind_head(q: &Query, constants: &[Value]) -> Result<Query, QueryError> {
    if constants.len() != q.head_arity() {
        return Err(QueryError::BindArity { expected: q.head_arity(), got: constants.len() });
    }
    let mut rules = Vec::new();
    'rules: for r in &q.rules {
        let mut subst: HashMap<&str, &Value> = HashMap::new();
        for (h, c) in r.head.iter().zip(constants) {
            if let Some(prev) = subst.insert(h, c) {
                if prev != c {
                    continue 'rules;
                }
            }
        }
        let body = r
            .body
            .iter()
            .map(|a| Atom {
                relation: a.relation.clone(),
                terms: a
                    .terms
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => subst.get(v.as_str()).map_or_else(|| t.clone(), |c| Term::Const((*c).clone())),
                        Term::Const(_) => t.clone(),
                    })
                    .collect(),
            })
            .collect();
        rules.push(Rule { head: Vec::new(), body });
    }
    if rules.is_empty() {
        return Err(QueryError::BindUnsatisfiable(q.name.clone()));
    }
    Ok(Query { name: q.name.clone(), rules })
}

/// `IdR(x1..xk) :- R(x1..xk)` for every relation, in declaration order.
pub fn identity_queries(db: &Database) -> Vec<Query> {
    db.relations().iter().map(|r| identity_query(r.name(), r.arity())).collect()
}

pub fn identity_query(relation: &str, arity: usize) -> Query {
    let vars: Vec<String> = (1..=arity).map(|i| format!("x{i}")).collect();
    let atom = Atom { relation: relation.to_string(), terms: vars.iter().map(|v| Term::Var(v.clone())).collect() };
    Query { name: format!("Id{relation}"), rules: vec![Rule { head: vars, body: vec![atom] }] }
}

/// Equality up to renaming: a permutation of rules, a permutation of atoms
/// inside each rule, a bijection of relation symbols shared by all rules,
/// and a per-rule bijection of variables that respects head positions.
pub fn alpha_equivalent(a: &Query, b: &Query) -> bool {
    if a.rules.len() != b.rules.len() || a.head_arity() != b.head_arity() {
        return false;
    }
    let n = a.rules.len();
    let mut used = vec![false; n];
    let mut rel = Bijection::default();
    match_rules(a, b, 0, &mut used, &mut rel)
}

#[derive(Clone, Default)]
struct Bijection {
    fwd: HashMap<String, String>,
    bwd: HashMap<String, String>,
}

impl Bijection {
    fn bind(&mut self, x: &str, y: &str) -> Option<bool> {
        match (self.fwd.get(x), self.bwd.get(y)) {
            (Some(fy), _) => (fy == y).then_some(false),
            (None, Some(_)) => None,
            (None, None) => {
                self.fwd.insert(x.to_string(), y.to_string());
                self.bwd.insert(y.to_string(), x.to_string());
                Some(true)
            }
        }
    }

    fn unbind(&mut self, x: &str) {
        if let Some(y) = self.fwd.remove(x) {
            self.bwd.remove(&y);
        }
    }
}

fn match_rules(a: &Query, b: &Query, i: usize, used: &mut [bool], rel: &mut Bijection) -> bool {
    if i == a.rules.len() {
        return true;
    }
    let ra = &a.rules[i];
    for j in 0..b.rules.len() {
        if used[j] {
            continue;
        }
        let rb = &b.rules[j];
        if ra.body.len() != rb.body.len() || ra.head.len() != rb.head.len() {
            continue;
        }
        let mut vars = Bijection::default();
        if !ra.head.iter().zip(&rb.head).all(|(x, y)| vars.bind(x, y).is_some()) {
            continue;
        }
        used[j] = true;
        let mut atom_used = vec![false; rb.body.len()];
        let saved = rel.clone();
        let mut cont = |rel: &mut Bijection| match_rules(a, b, i + 1, used, rel);
        if match_atoms(ra, rb, 0, &mut atom_used, rel, &mut vars, &mut cont) {
            return true;
        }
        *rel = saved;
        used[j] = false;
    }
    false
}

fn match_atoms(
    ra: &Rule,
    rb: &Rule,
    k: usize,
    used: &mut [bool],
    rel: &mut Bijection,
    vars: &mut Bijection,
    cont: &mut dyn FnMut(&mut Bijection) -> bool,
) -> bool {
    if k == ra.body.len() {
        return cont(rel);
    }
    let aa = &ra.body[k];
    for j in 0..rb.body.len() {
        if used[j] || rb.body[j].terms.len() != aa.terms.len() {
            continue;
        }
        let ab = &rb.body[j];
        let Some(new_rel) = rel.bind(&aa.relation, &ab.relation) else { continue };
        let mut new_vars = Vec::new();
        let mut ok = true;
        for (ta, tb) in aa.terms.iter().zip(&ab.terms) {
            match (ta, tb) {
                (Term::Var(x), Term::Var(y)) => match vars.bind(x, y) {
                    Some(true) => new_vars.push(x.clone()),
                    Some(false) => {}
                    None => ok = false,
                },
                (Term::Const(c), Term::Const(d)) if c == d => {}
                _ => ok = false,
            }
            if !ok {
                break;
            }
        }
        if ok {
            used[j] = true;
            if match_atoms(ra, rb, k + 1, used, rel, vars, cont) {
                return true;
            }
            used[j] = false;
        }
        for x in &new_vars {
            vars.unbind(x);
        }
        if new_rel {
            rel.unbind(&aa.relation);
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relcore::Semantics;

    pub(crate) const TRIANGLE_MINUS: &str = "Q(x) :- R(x,a,b), R(x,b,c), R(x,c,a).\nQ(x) :- R(x,e,f), R(x,f,g).";

    #[test]
    fn parses_chain() {
        let q = parse_query("Q(x) :- R(x,y), S(y,z).").unwrap();
        assert_eq!(q.rules.len(), 1);
        assert_eq!(q.rules[0].head, vec!["x"]);
        let rels: Vec<_> = q.rules[0].body.iter().map(|a| a.relation.as_str()).collect();
        assert_eq!(rels, ["R", "S"]);
    }

    #[test]
    fn parses_union_over_one_relation() {
        let q = parse_query(TRIANGLE_MINUS).unwrap();
        assert_eq!(q.rules.len(), 2);
        assert!(q.rules.iter().all(|r| r.body.iter().all(|a| a.relation == "R")));
        assert_eq!(q.relations(), ["R"]);
    }

    #[test]
    fn rejects_unsafe() {
        let err = parse_query("Q(x) :- R(y,z).").unwrap_err();
        assert_eq!(err, QueryError::Unsafe { rule: 0, var: "x".into() });
    }

    #[test]
    fn rejects_head_mismatch() {
        assert!(matches!(parse_query("Q(x) :- R(x).\nQ(x,y) :- R(x), S(y)."), Err(QueryError::HeadMismatch { .. })));
        assert!(matches!(parse_query("Q(x) :- R(x).\nP(x) :- R(x)."), Err(QueryError::Syntax { .. })));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_query("Q(x) :- R(x,\n  y S(y).") {
            Err(QueryError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 5)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_query("Q(x) :- R(x"), Err(QueryError::Syntax { .. })));
        assert!(matches!(parse_query("Q(x) :- R('a)."), Err(QueryError::Syntax { .. })));
        assert_eq!(parse_query("# nothing\n"), Err(QueryError::Empty));
    }

    #[test]
    fn constants_comments_and_boolean_heads() {
        let q = parse_query("# header\nQ() :- R(1, y), S('BOS', -3). # trailing").unwrap();
        assert!(q.is_boolean());
        assert_eq!(q.rules[0].body[0].terms[0], Term::Const(Value::Int(1)));
        assert_eq!(q.rules[0].body[1].terms[0], Term::Const(Value::Str("BOS".into())));
        assert_eq!(q.rules[0].body[1].terms[1], Term::Const(Value::Int(-3)));
    }

    #[test]
    fn print_parse_round_trip() {
        for text in ["Q(x) :- R(x,y), S(y,z).", TRIANGLE_MINUS, "B() :- R(1,'a b'), T(x)."] {
            let q = parse_query(text).unwrap();
            assert_eq!(parse_query(&q.to_string()).unwrap(), q);
        }
    }

    #[test]
    fn full_query_promotes_all_variables() {
        let q = parse_query("Q(x) :- R(x,y), S(y,z).").unwrap();
        let f = full_query(&q);
        assert_eq!(f.rules[0].head, ["x", "y", "z"]);
        assert_eq!(full_query(&f), f);
        let b = parse_query("Q() :- R(x).").unwrap();
        assert_eq!(full_query(&b).rules[0].head, ["x"]);
    }

    #[test]
    fn existential_drops_head() {
        let q = parse_query("Q(x) :- R(x,y), S(y,z).").unwrap();
        let e = existential_query(&q);
        assert_eq!(e.to_string(), "Q() :- R(x,y), S(y,z).");
        assert_eq!(existential_query(&e), e);
    }

    #[test]
    fn bind_head_substitutes() {
        let q = parse_query("Q(x) :- R(x,y), S(y).").unwrap();
        let b = bind_head(&q, &[Value::Int(1)]).unwrap();
        assert_eq!(b.to_string(), "Q() :- R(1,y), S(y).");
        let q2 = parse_query("Q(x) :- R(x,y), S(x).").unwrap();
        assert_eq!(bind_head(&q2, &[Value::Int(1)]).unwrap().to_string(), "Q() :- R(1,y), S(1).");
        let boolean = parse_query("Q() :- R(x).").unwrap();
        assert_eq!(bind_head(&boolean, &[]).unwrap(), boolean);
        assert!(matches!(bind_head(&q, &[]), Err(QueryError::BindArity { .. })));
    }

    #[test]
    fn bind_head_drops_conflicting_rules() {
        let q = parse_query("Q(x,y) :- R(x,y).\nQ(x,x) :- S(x).").unwrap();
        let b = bind_head(&q, &[Value::Int(1), Value::Int(2)]).unwrap();
        assert_eq!(b.rules.len(), 1);
        let q = parse_query("Q(x,x) :- S(x).").unwrap();
        assert!(bind_head(&q, &[Value::Int(1), Value::Int(2)]).is_err());
    }

    #[test]
    fn identity_queries_follow_manifest_order() {
        let db = Database::builder(Semantics::Set).relation("R", 2).unwrap().relation("S", 1).unwrap().build();
        let ids: Vec<String> = identity_queries(&db).iter().map(|q| q.to_string()).collect();
        assert_eq!(ids, ["IdR(x1,x2) :- R(x1,x2).", "IdS(x1) :- S(x1)."]);
        for q in identity_queries(&db) {
            assert!(q.identity_relation().is_some());
        }
        let empty = Database::builder(Semantics::Set).build();
        assert!(identity_queries(&empty).is_empty());
        assert_eq!(parse_query("Q(y,x) :- R(x,y).").unwrap().identity_relation(), None);
        assert_eq!(parse_query("Q(x) :- R(x,x).").unwrap().identity_relation(), None);
    }

    #[test]
    fn alpha_equivalence() {
        let q = parse_query(TRIANGLE_MINUS).unwrap();
        let renamed = parse_query("P(u) :- T(u,q,r), T(u,p,q).\nP(u) :- T(u,b,c), T(u,c,a), T(u,a,b).").unwrap();
        assert!(alpha_equivalent(&q, &renamed));
        let broken = parse_query("P(u) :- T(u,q,r), T(u,p,q).\nP(u) :- T(u,b,c), T(u,c,a), T(u,a,c).").unwrap();
        assert!(!alpha_equivalent(&q, &broken));
        let head_moved = parse_query("Q(b) :- R(x,a,b), R(x,b,c), R(x,c,a).\nQ(x) :- R(x,e,f), R(x,f,g).").unwrap();
        assert!(!alpha_equivalent(&q, &head_moved));
        let chain = parse_query("Q(x) :- R(x,y), S(y,z).").unwrap();
        let chain2 = parse_query("Q(a) :- B(b,c), A(a,b).").unwrap();
        assert!(alpha_equivalent(&chain, &chain2));
        let self_join = parse_query("Q(a) :- A(b,c), A(a,b).").unwrap();
        assert!(!alpha_equivalent(&chain, &self_join));
    }
}
