//! Data-parallel helpers. With the `parallel` feature they run on the rayon
//! pool; without it, or under [`Execution::Sequential`], they run inline
//! and produce identical results in identical order.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether work actually fans out in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Order-preserving map with the default execution.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_with(Execution::default(), items, f)
}

pub fn map_with<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && items.len() > 1 {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Splits `0..n` into contiguous chunks, maps each chunk, and returns the
/// per-chunk results in chunk order.
pub fn map_ranges<R, F>(exec: Execution, n: u64, chunks: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(std::ops::Range<u64>) -> R + Sync + Send,
{
    let chunks = chunks.max(1) as u64;
    let size = n.div_ceil(chunks).max(1);
    let ranges: Vec<std::ops::Range<u64>> =
        (0..chunks).map(|i| (i * size).min(n)..((i + 1) * size).min(n)).filter(|r| !r.is_empty()).collect();
    map_with(exec, &ranges, |r| f(r.clone()))
}

/// Worker count used to size chunked work.
pub fn threads(exec: Execution) -> usize {
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return rayon::current_num_threads();
    }
    let _ = exec;
    1
}
