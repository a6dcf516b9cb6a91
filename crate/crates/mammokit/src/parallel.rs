//! Parallel/sequential execution seam.
//!
//! Hot loops in this crate are data-parallel over disjoint rows, tiles or
//! batch items. Each call site funnels through the helpers here, which run
//! on rayon when the `parallel` feature is enabled and degrade to plain
//! sequential loops when it is not. Work is always partitioned into
//! disjoint output slots, so results are bit-identical in both modes and
//! for any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f(chunk_index, chunk)` to consecutive disjoint chunks of `buf`.
///
/// `chunk_len` must be nonzero; the final chunk may be shorter.
#[cfg(feature = "parallel")]
pub(crate) fn for_each_chunk<T, F>(buf: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Send + Sync,
{
    buf.par_chunks_mut(chunk_len)
        .enumerate()
        .for_each(|(i, chunk)| f(i, chunk));
}

/// Sequential fallback of [`for_each_chunk`].
#[cfg(not(feature = "parallel"))]
pub(crate) fn for_each_chunk<T, F>(buf: &mut [T], chunk_len: usize, f: F)
where
    F: Fn(usize, &mut [T]),
{
    for (i, chunk) in buf.chunks_mut(chunk_len).enumerate() {
        f(i, chunk);
    }
}

/// Maps `f` over `0..len`, returning results in index order.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<R, F>(len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Send + Sync,
{
    (0..len).into_par_iter().map(f).collect()
}

/// Sequential fallback of [`map_indexed`].
#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<R, F>(len: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..len).map(f).collect()
}
