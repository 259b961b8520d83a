//! Fan-out over independent work items. Every item reads only shared
//! immutable data, so results are identical in either mode.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled, and
    /// falls back to sequential execution otherwise.
    Parallel,
}

impl Default for Parallelism {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Parallelism::Parallel
        } else {
            Parallelism::Sequential
        }
    }
}

/// Smallest team whose per-step work outweighs a fork-join per step.
pub const MIN_PARALLEL_TEAM: usize = 16;

impl Parallelism {
    /// The mode to use for per-step fan-out over a team of `n` robots.
    pub fn for_team(self, n: usize) -> Self {
        if n >= MIN_PARALLEL_TEAM {
            self
        } else {
            Parallelism::Sequential
        }
    }
}

pub fn map_indexed<T, F>(parallelism: Parallelism, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match parallelism {
        #[cfg(feature = "parallel")]
        Parallelism::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}
