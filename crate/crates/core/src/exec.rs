//! Execution strategy for the data-parallel kernels.
//!
//! Every hot loop in the crate (quartic/sextic sums, probe batches, seed
//! sweeps) goes through [`Execution`]. With the `parallel` feature the
//! [`Execution::Parallel`] strategy fans out over rayon's pool; without it
//! both strategies run the same sequential code path, so results never depend
//! on the feature set beyond floating-point summation order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Maps `f` over `0..len`, preserving index order in the output.
    pub fn map_range<R, F>(self, len: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..len).into_par_iter().map(f).collect(),
            _ => (0..len).map(f).collect(),
        }
    }

    /// Maps `f` over a slice, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }

    /// Sums `f(i)` over `0..len`. Partial sums are combined in index order so
    /// the result is deterministic for a given strategy.
    pub fn sum_range<R, F>(self, len: usize, f: F) -> R
    where
        R: Send + std::iter::Sum<R> + Copy,
        F: Fn(usize) -> R + Sync + Send,
    {
        self.map_range(len, f).into_iter().sum()
    }
}
