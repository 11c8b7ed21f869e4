//! Deterministic data-parallel helpers.
//!
//! Every helper here produces output that depends only on its inputs, never
//! on the number of worker threads. Maps preserve input order; reductions
//! split the input into partitions of a fixed size ([`PARTITION`]) and merge
//! the partial results in partition order. With the `parallel` feature
//! disabled the same partitioning runs on the calling thread, so the
//! sequential fallback is bit-identical to any parallel run.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Fixed partition length for reductions. Must not depend on thread count.
pub const PARTITION: usize = 4096;

/// Order-preserving map over a slice.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Order-preserving map over `0..n`.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
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

/// Map each fixed-size partition of `items` to a partial result, returned in
/// partition order.
pub fn map_partitions<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&[T]) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_chunks(PARTITION).map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.chunks(PARTITION).map(f).collect()
    }
}

/// Sum with a fixed association: in-order partials over [`PARTITION`]-sized
/// chunks, then an in-order sum of the partials.
pub fn sum(xs: &[f64]) -> f64 {
    map_partitions(xs, |c| c.iter().sum::<f64>()).into_iter().sum()
}

/// Sum of `f(i)` over `0..n` with the same association as [`sum`].
pub fn sum_by<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let partitions = n.div_ceil(PARTITION);
    map_range(partitions, |p| {
        let lo = p * PARTITION;
        let hi = (lo + PARTITION).min(n);
        (lo..hi).map(&f).sum::<f64>()
    })
    .into_iter()
    .sum()
}

/// Sort whose result is unique for a total order, so thread count cannot
/// leak into the output.
pub fn sort_by<T, F>(v: &mut [T], cmp: F)
where
    T: Send,
    F: Fn(&T, &T) -> std::cmp::Ordering + Sync,
{
    #[cfg(feature = "parallel")]
    {
        v.par_sort_unstable_by(cmp)
    }
    #[cfg(not(feature = "parallel"))]
    {
        v.sort_unstable_by(cmp)
    }
}
