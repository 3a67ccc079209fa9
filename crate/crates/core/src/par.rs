//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper returns results in index order, and reductions are done
//! sequentially over those ordered partial results, so the output is
//! bit-identical whether or not the `parallel` feature is enabled and
//! regardless of the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(0..n).map(f).collect()`, evaluated in parallel when enabled.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Ordered sum of `f(i)` for `i` in `0..n`.
pub fn sum_range<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_range(n, f).into_iter().sum()
}

/// Applies `f(chunk_index, chunk)` to consecutive `chunk`-sized pieces.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
}

/// Runs independent jobs on at most `jobs` workers; results come back in
/// input order.
pub fn run_jobs<I, T, F>(inputs: Vec<I>, jobs: usize, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if jobs > 1 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
                return pool.install(|| inputs.into_par_iter().map(&f).collect());
            }
        }
        inputs.into_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        inputs.into_iter().map(f).collect()
    }
}
