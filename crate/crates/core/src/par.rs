//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) work is spread over the rayon pool;
//! without it every helper runs sequentially. Results always come back in
//! input order and reductions are merged chunk by chunk in a fixed order, so
//! both modes produce bit-identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::model::{CatchRecord, FilterSpec};

/// Records per work unit for chunked reductions. Fixed so that merge order
/// does not depend on the thread count.
pub const CHUNK: usize = 16 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Falls back to sequential execution when built without `parallel`.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

pub fn map<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

/// Applies `f` to consecutive `chunk`-sized slices; results in slice order.
pub fn map_chunks<T, R, F>(exec: Exec, items: &[T], chunk: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&[T]) -> R + Sync + Send,
{
    let chunk = chunk.max(1);
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => items.par_chunks(chunk).map(f).collect(),
        _ => items.chunks(chunk).map(f).collect(),
    }
}

pub fn count_matching(records: &[CatchRecord], filter: &FilterSpec) -> usize {
    map_chunks(Exec::default(), records, CHUNK, |chunk| chunk.iter().filter(|r| filter.matches(r)).count())
        .into_iter()
        .sum()
}
