//! Seeded random databases over a query's schema.

use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::query::Query;
use crate::relcore::{Database, DbError, Semantics, Value};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenProfile {
    pub query: Query,
    pub n_tuples: usize,
    pub max_domain: u64,
    pub semantics: Semantics,
    pub max_bag: u64,
    pub seed: u64,
}

impl GenProfile {
    pub fn new(query: Query, n_tuples: usize, seed: u64) -> GenProfile {
        GenProfile { query, n_tuples, max_domain: 1000, semantics: Semantics::Set, max_bag: 10, seed }
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("{relation} needs {need} distinct tuples but only {space} exist over [1..{max_domain}]^{arity}")]
    DomainTooSmall { relation: String, need: usize, space: u128, max_domain: u64, arity: usize },
    #[error("max_domain and max_bag must be at least 1")]
    BadProfile,
    #[error(transparent)]
    Db(#[from] DbError),
}

/// Relations of `q` with their arities, in order of first appearance.
pub fn schema(q: &Query) -> Vec<(String, usize)> {
    let mut out: Vec<(String, usize)> = Vec::new();
    for a in q.rules.iter().flat_map(|r| &r.body) {
        if !out.iter().any(|(n, _)| *n == a.relation) {
            out.push((a.relation.clone(), a.terms.len()));
        }
    }
    out
}

/// `n` split evenly over `parts`; the first `n % parts` get one extra.
pub fn split_evenly(n: usize, parts: usize) -> Vec<usize> {
    if parts == 0 {
        return Vec::new();
    }
    (0..parts).map(|i| n / parts + usize::from(i < n % parts)).collect()
}

/// Draws each relation's share of `n_tuples` uniformly without replacement
/// from `[1..max_domain]^arity`; bag multiplicities are uniform in
/// `[1..max_bag]`.
pub fn gen_random(p: &GenProfile) -> Result<Database, GenError> {
    if p.max_domain == 0 || p.max_bag == 0 {
        return Err(GenError::BadProfile);
    }
    let rels = schema(&p.query);
    let shares = split_evenly(p.n_tuples, rels.len());
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut b = Database::builder(p.semantics);
    for ((name, arity), &need) in rels.iter().zip(&shares) {
        b.add_relation(name, *arity)?;
        let space = (p.max_domain as u128).checked_pow(*arity as u32).unwrap_or(u128::MAX);
        if need as u128 > space {
            return Err(GenError::DomainTooSmall {
                relation: name.clone(),
                need,
                space,
                max_domain: p.max_domain,
                arity: *arity,
            });
        }
        let codes: Vec<u128> = if space <= usize::MAX as u128 {
            index::sample(&mut rng, space as usize, need).into_iter().map(|c| c as u128).collect()
        } else {
            let mut seen = HashSet::new();
            let mut out = Vec::with_capacity(need);
            while out.len() < need {
                let c = rng.random_range(0..space);
                if seen.insert(c) {
                    out.push(c);
                }
            }
            out
        };
        for mut c in codes {
            let mut vals = Vec::with_capacity(*arity);
            for _ in 0..*arity {
                vals.push(Value::Int((c % p.max_domain as u128) as i64 + 1));
                c /= p.max_domain as u128;
            }
            let count = match p.semantics {
                Semantics::Set => 1,
                Semantics::Bag => rng.random_range(1..=p.max_bag),
            };
            b.insert(name, vals, count)?;
        }
    }
    Ok(b.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse_query;

    fn star() -> Query {
        parse_query("Q(a) :- R(a,b), S(a,c), T(a,d).").unwrap()
    }

    #[test]
    fn deterministic_and_sized() {
        let p = GenProfile { max_domain: 20, ..GenProfile::new(star(), 100, 7) };
        let a = gen_random(&p).unwrap();
        assert_eq!(a.tuple_count(), 100);
        assert_eq!(a.relation("R").unwrap().len(), 34);
        assert_eq!(a.relation("T").unwrap().len(), 33);
        let b = gen_random(&p).unwrap();
        assert_eq!(a.tuples().collect::<Vec<_>>(), b.tuples().collect::<Vec<_>>());
        let c = gen_random(&GenProfile { seed: 8, ..p }).unwrap();
        assert_ne!(a.tuples().collect::<Vec<_>>(), c.tuples().collect::<Vec<_>>());
    }

    #[test]
    fn values_in_range_and_multiplicities() {
        let p = GenProfile { max_domain: 3, semantics: Semantics::Bag, max_bag: 4, ..GenProfile::new(star(), 27, 1) };
        let db = gen_random(&p).unwrap();
        for (_, t, m) in db.tuples() {
            assert!((1..=4).contains(&m));
            assert!(t.values.iter().all(|v| matches!(v, Value::Int(1..=3))));
        }
        let set = gen_random(&GenProfile { semantics: Semantics::Set, ..p }).unwrap();
        assert!(set.tuples().all(|(_, _, m)| m == 1));
    }

    #[test]
    fn empty_and_overfull() {
        let db = gen_random(&GenProfile::new(star(), 0, 1)).unwrap();
        assert!(db.is_empty());
        assert_eq!(db.relations().len(), 3);
        let p = GenProfile { max_domain: 2, ..GenProfile::new(star(), 15, 1) };
        assert!(matches!(gen_random(&p), Err(GenError::DomainTooSmall { need: 5, space: 4, .. })));
    }

    #[test]
    fn split() {
        assert_eq!(split_evenly(10, 3), [4, 3, 3]);
        assert_eq!(split_evenly(2, 3), [1, 1, 0]);
    }
}
