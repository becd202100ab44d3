//! Deterministic parallel reductions over path indices.
//!
//! Paths are cut into fixed chunks; each chunk is folded in index order and
//! the chunk results are combined in chunk order. The answer therefore does
//! not depend on how many threads rayon uses.

use rayon::prelude::*;

pub const CHUNK: u64 = 4096;

/// Folds `0..n` with `fold`, merging chunk accumulators left to right with `merge`.
pub fn fold_indexed<A, F, M, I>(n: u64, init: I, fold: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(A, u64) -> A + Sync + Send,
    M: Fn(A, A) -> A,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            (lo..hi).fold(init(), &fold)
        })
        .collect();
    parts.into_iter().fold(init(), merge)
}

/// `f(i)` for every `i < n`, in index order.
pub fn map_indexed<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    (0..n).into_par_iter().map(&f).collect()
}
