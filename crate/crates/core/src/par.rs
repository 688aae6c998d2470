//! Deterministic parallel helpers.
//!
//! With the `parallel` feature the maps below fan out over rayon; without it
//! they run on the calling thread. Results are bitwise identical either way:
//! each unit of work is a single closure call whose internal arithmetic is
//! sequential, and reductions fold the per-unit results in index order, so
//! thread count never changes how floating point additions associate.
//!
//! The `_seq` twins always run on the calling thread even in a parallel
//! build. They exist so the bench suite can compare both paths in one binary.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Kahan compensated accumulator for the long power-law sums. One running
/// compensation term recovers most of what naive summation loses; cheap
/// enough to use everywhere a sum has more than a handful of terms.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.sum
    }
}

/// Chunk length for flat summation. Fixed so parallel and sequential builds
/// split a slice identically.
const CHUNK: usize = 1024;

/// `f(i)` for `i` in `0..n`, in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
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

/// Sequential twin of [`map_indexed`].
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sum of `f(0..n)` with each term computed as one unit and the terms folded
/// in index order.
pub fn det_sum_over<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_indexed(n, f).iter().sum()
}

/// Sequential twin of [`det_sum_over`].
pub fn det_sum_over_seq<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    (0..n).map(f).sum()
}

/// Sum of a slice in fixed 1024-element chunks: chunk interiors accumulate
/// sequentially, chunk totals fold in order.
pub fn det_sum(values: &[f64]) -> f64 {
    let parts: Vec<f64> = {
        #[cfg(feature = "parallel")]
        {
            values.par_chunks(CHUNK).map(|c| c.iter().sum::<f64>()).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            values.chunks(CHUNK).map(|c| c.iter().sum::<f64>()).collect()
        }
    };
    parts.iter().sum()
}

/// Sequential twin of [`det_sum`], chunked the same way.
pub fn det_sum_seq(values: &[f64]) -> f64 {
    let parts: Vec<f64> = values.chunks(CHUNK).map(|c| c.iter().sum::<f64>()).collect();
    parts.iter().sum()
}

/// Maximum of `f(0..n)`; `-inf` when `n == 0`. Max is order-independent, so
/// this may reduce in parallel without a fixed fold order.
pub fn det_max_over<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n)
            .into_par_iter()
            .map(f)
            .reduce(|| f64::NEG_INFINITY, f64::max)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).fold(f64::NEG_INFINITY, f64::max)
    }
}
