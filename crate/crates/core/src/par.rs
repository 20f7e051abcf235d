//! Batch execution over replicate ranges.
//!
//! Work is cut into fixed-size chunks that do not depend on the worker
//! count. Chunk results are reduced left to right in chunk order, so serial
//! and parallel runs agree bit for bit, floating-point sums included.

use std::ops::Range;

use serde::{Deserialize, Serialize};

/// How a batch is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Execution {
    Serial,
    /// `threads == 0` uses the global rayon pool.
    Parallel { threads: usize },
    #[default]
    Auto,
}

impl Execution {
    /// `--threads` style: 1 is serial, 0 lets rayon decide.
    pub fn with_threads(threads: usize) -> Self {
        match threads {
            1 => Execution::Serial,
            t => Execution::Parallel { threads: t },
        }
    }
}

/// Runs `job` on every chunk of `0..total` and folds the results in order.
pub fn run_chunked<T, F, R>(total: u64, chunk: u64, exec: Execution, job: F, reduce: R) -> Option<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
    R: Fn(T, T) -> T,
{
    let chunk = chunk.max(1);
    let n_chunks = total.div_ceil(chunk);
    let range_of = |c: u64| (c * chunk)..((c + 1) * chunk).min(total);
    let parts = map_chunks(n_chunks, exec, |c| job(range_of(c)));
    parts.into_iter().reduce(reduce)
}

#[cfg(feature = "parallel")]
fn map_chunks<T, F>(n_chunks: u64, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match exec {
        Execution::Serial => (0..n_chunks).map(f).collect(),
        Execution::Auto | Execution::Parallel { threads: 0 } => {
            (0..n_chunks).into_par_iter().map(f).collect()
        }
        Execution::Parallel { threads } => {
            match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                Ok(pool) => pool.install(|| (0..n_chunks).into_par_iter().map(&f).collect()),
                Err(_) => (0..n_chunks).map(f).collect(),
            }
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn map_chunks<T, F>(n_chunks: u64, _exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n_chunks).map(f).collect()
}
