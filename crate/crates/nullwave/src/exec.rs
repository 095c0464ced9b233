//! Row-parallel execution with deterministic results.
//!
//! Grid sweeps are partitioned by row. Writes go to disjoint rows, and
//! reductions collect one partial value per row into a vector that the
//! caller folds serially, so results are bit-identical for every worker
//! count.

use rayon::prelude::*;
use std::ops::Range;

/// A worker pool of fixed size; size 1 bypasses the pool entirely so that
/// tight per-row loops pay no dispatch overhead.
pub struct Workers {
    pool: Option<rayon::ThreadPool>,
    count: usize,
}

impl Workers {
    /// A pool with `count` workers; 0 is treated as 1.
    pub fn new(count: usize) -> Workers {
        let count = count.max(1);
        let pool = if count == 1 {
            None
        } else {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(count)
                    .build()
                    .expect("worker pool"),
            )
        };
        Workers { pool, count }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Run `f(row, row_slice)` for every row in `rows`, where `row_slice` is
    /// that row of `out` (`n` values per row). Rows are disjoint, so the
    /// output is identical for any worker count.
    pub fn write_rows<S, F>(&self, out: &mut [S], n: usize, rows: Range<usize>, f: F)
    where
        S: Send,
        F: Fn(usize, &mut [S]) + Sync,
    {
        debug_assert!(rows.end * n <= out.len());
        match &self.pool {
            None => {
                for i in rows {
                    f(i, &mut out[i * n..(i + 1) * n]);
                }
            }
            Some(pool) => pool.install(|| {
                out.par_chunks_mut(n)
                    .enumerate()
                    .skip(rows.start)
                    .take(rows.len())
                    .for_each(|(i, row)| f(i, row));
            }),
        }
    }

    /// Map every row index to a partial value, collected in row order. The
    /// caller folds the vector serially, keeping reductions deterministic.
    pub fn map_rows<T, F>(&self, rows: Range<usize>, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match &self.pool {
            None => rows.map(f).collect(),
            Some(pool) => pool.install(|| rows.into_par_iter().map(f).collect()),
        }
    }

    /// Write disjoint rows and collect one partial value per row, in row
    /// order. Combines [`write_rows`](Self::write_rows) and
    /// [`map_rows`](Self::map_rows) in a single sweep.
    pub fn map_write_rows<S, T, F>(
        &self,
        out: &mut [S],
        n: usize,
        rows: Range<usize>,
        f: F,
    ) -> Vec<T>
    where
        S: Send,
        T: Send,
        F: Fn(usize, &mut [S]) -> T + Sync,
    {
        debug_assert!(rows.end * n <= out.len());
        match &self.pool {
            None => rows.map(|i| f(i, &mut out[i * n..(i + 1) * n])).collect(),
            Some(pool) => pool.install(|| {
                out.par_chunks_mut(n)
                    .enumerate()
                    .skip(rows.start)
                    .take(rows.len())
                    .map(|(i, row)| f(i, row))
                    .collect()
            }),
        }
    }
}
