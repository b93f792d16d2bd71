//! Node-parallel map used by every grid sweep.
//!
//! With the `parallel` feature the sweeps run on the rayon pool; without it
//! `Execution::Parallel` silently degrades to the sequential path. Both paths
//! produce identical output because each node is computed independently from
//! immutable inputs and results are collected in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a node sweep is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when sweeps actually run on more than one thread.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

pub(crate) fn map_indices<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}
