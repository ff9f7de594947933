//! Exhaustive reference solver for small instances.
//!
//! Every subset of the distinct tuples is tried, views are re-evaluated
//! from scratch on db \ Γ through [`gdp::verify`], and no solver model is
//! involved. Subsets are visited in Gray-code order, split into ranges
//! that may run in parallel.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::gdp::{self, GdpError, GdpInstance};
use crate::par::{self, Execution};
use crate::relcore::TupleRef;

pub const DEFAULT_CAP: usize = 20;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{n} distinct tuples exceed the brute-force cap of {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error(transparent)]
    Gdp(#[from] GdpError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    /// `None` when no subset satisfies the constraints.
    pub optimum: Option<i64>,
    /// Lexicographically least optimal Γ in canonical tuple order.
    pub gamma: Option<Vec<TupleRef>>,
    pub explored: u64,
}

impl OracleResult {
    pub fn is_feasible(&self) -> bool {
        self.optimum.is_some()
    }
}

/// Best (objective, sorted tuple indexes) in a chunk.
type Best = Option<(i64, Vec<usize>)>;

fn better(a: Best, b: Best) -> Best {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => Some(if (b.0, &b.1) < (a.0, &a.1) { b } else { a }),
    }
}

pub fn brute_force(inst: &GdpInstance, cap: usize) -> Result<OracleResult, OracleError> {
    brute_force_with(inst, cap, Execution::default())
}

pub fn brute_force_with(inst: &GdpInstance, cap: usize, exec: Execution) -> Result<OracleResult, OracleError> {
    let tuples: Vec<TupleRef> = inst.db().tuples().map(|(_, t, _)| t).collect();
    let n = tuples.len();
    if n > cap || n >= 63 {
        return Err(OracleError::CapExceeded { n, cap });
    }
    let total = 1u64 << n;
    let chunks = par::threads(exec) * 4;
    let results = par::map_ranges(exec, total, chunks, |range| -> Result<Best, GdpError> {
        let mut best: Best = None;
        for i in range {
            let code = i ^ (i >> 1);
            let idx: Vec<usize> = (0..n).filter(|&b| code >> b & 1 == 1).collect();
            let gamma: BTreeSet<&TupleRef> = idx.iter().map(|&b| &tuples[b]).collect();
            let r = gdp::verify(inst, gamma)?;
            if r.feasible {
                best = better(best, Some((r.objective, idx)));
            }
        }
        Ok(best)
    });
    let mut best: Best = None;
    for r in results {
        best = better(best, r?);
    }
    Ok(OracleResult {
        optimum: best.as_ref().map(|b| b.0),
        gamma: best.map(|(_, idx)| idx.into_iter().map(|i| tuples[i].clone()).collect()),
        explored: total,
    })
}
