//! Thin switch between rayon and plain iteration for the data-parallel
//! batch loops (time sampling, parameter sweeps, batch verification).
//!
//! With the `parallel` feature (on by default) [`map_collect`] fans out
//! over rayon's global pool; without it, it is exactly
//! [`map_collect_seq`]. Callers that need a guaranteed-sequential run
//! regardless of features (benchmark baselines) pass [`Mode::Sequential`]
//! to the `*_mode` entry points in `dynamics` and `report`.

/// Execution choice for batch entry points that expose one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Rayon when the `parallel` feature is enabled, sequential otherwise.
    Auto,
    /// Plain iteration, always.
    Sequential,
}

/// `(0..n).map(f)` collected in index order, in parallel when available.
#[cfg(feature = "parallel")]
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// `(0..n).map(f)` collected in index order, in parallel when available.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_collect_seq(n, f)
}

/// `(0..n).map(f)` collected in index order, always sequential.
pub fn map_collect_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Dispatch on [`Mode`].
pub fn map_collect_mode<T, F>(mode: Mode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        Mode::Auto => map_collect(n, f),
        Mode::Sequential => map_collect_seq(n, f),
    }
}
