//! Data-parallel helpers. Each output element is computed by exactly one
//! closure call with a fixed internal summation order, so the parallel and the
//! sequential paths produce identical bits.

use alloc::vec::Vec;

#[cfg(feature = "std")]
use rayon::prelude::*;

/// Calls `f(chunk_index, chunk)` for every `chunk`-sized piece of `out`.
pub(crate) fn fill_chunks<F>(out: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Send + Sync,
{
    if chunk == 0 {
        return;
    }
    #[cfg(feature = "std")]
    out.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "std"))]
    out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// `(0..n).map(f).collect()`, in parallel when available.
pub(crate) fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "std")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "std"))]
    {
        (0..n).map(f).collect()
    }
}
