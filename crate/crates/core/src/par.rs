//! Execution strategy for the data-parallel loops.
//!
//! With the `parallel` feature (default) the row scans, enumeration oracles
//! and Monte Carlo chunks run on the rayon pool. Without it every
//! [`Exec::Parallel`] request quietly runs sequentially. Every reduction in
//! this crate combines integer partial sums or ordered chunk results, so the
//! output is bit-identical under either strategy.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// `true` when work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Maps `f` over `0..len` and collects the results in index order.
pub(crate) fn map_indexed<T, F>(exec: Exec, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}
