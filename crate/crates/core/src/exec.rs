//! Data-parallel execution helper.
//!
//! With the `parallel` feature (default) the map runs on the rayon global
//! pool; without it the same code runs sequentially. Results are collected
//! in index order either way, so callers that reduce them in a fixed order
//! get bit-identical output regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..len`, returning results in index order.
pub fn par_map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Whether this build executes maps on the rayon pool.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
