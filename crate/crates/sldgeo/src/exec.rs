//! Data-parallel map over grids and shards, with a sequential fallback when
//! the `parallel` feature is disabled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).map(f).collect()
}

pub(crate) fn try_map_indexed<U, F>(n: usize, f: F) -> crate::Result<Vec<U>>
where
    U: Send,
    F: Fn(usize) -> crate::Result<U> + Sync + Send,
{
    map_indexed(n, f).into_iter().collect()
}
