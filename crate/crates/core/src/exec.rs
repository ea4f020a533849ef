//! Execution strategy for data-parallel loops.
//!
//! Results are always collected in index order, so output does not depend on
//! the strategy or the number of workers.

#[cfg(feature = "parallel")]
use std::sync::OnceLock;

use crate::error::{invalid, Result};

/// Environment variable capping the worker count of parallel loops.
pub const THREADS_ENV: &str = "TRIMER_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise runs
    /// sequentially.
    #[default]
    Parallel,
}

/// Parses the thread cap from the environment. Unset or empty means no cap.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(invalid(
                "TRIMER_THREADS",
                format!("expected a positive integer, got `{v}`"),
            )),
        },
        Err(_) => Ok(None),
    }
}

#[cfg(feature = "parallel")]
fn pool() -> Option<&'static rayon::ThreadPool> {
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();
    POOL.get_or_init(|| {
        let n = threads_from_env().ok().flatten()?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()
    })
    .as_ref()
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            let run = || (0..n).into_par_iter().map(&f).collect();
            return match pool() {
                Some(p) => p.install(run),
                None => run(),
            };
        }
        (0..n).map(f).collect()
    }

    /// As [`Execution::map`], stopping at an error. When several indices fail
    /// the reported error is the one with the lowest index.
    pub fn try_map<R, F>(self, n: usize, f: F) -> Result<Vec<R>>
    where
        R: Send,
        F: Fn(usize) -> Result<R> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}
