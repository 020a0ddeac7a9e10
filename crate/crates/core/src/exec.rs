//! Path-level executor.
//!
//! Every Monte Carlo loop in the crate maps a path index to a result and
//! reduces the results in index order. The parallel executor (rayon, behind
//! the `parallel` feature) and the sequential executor therefore produce
//! bit-identical outputs.

use crate::error::Result;
#[cfg(feature = "parallel")]
use crate::error::SpError;
#[cfg(feature = "parallel")]
use std::sync::Arc;

#[derive(Clone)]
pub struct Executor {
    workers: usize,
    #[cfg(feature = "parallel")]
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor").field("workers", &self.workers).finish()
    }
}

impl Executor {
    pub fn sequential() -> Self {
        Self {
            workers: 1,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    /// Builds an executor with `workers` threads. Without the `parallel`
    /// feature this is always the sequential executor.
    pub fn with_workers(workers: usize) -> Result<Self> {
        if workers <= 1 {
            return Ok(Self::sequential());
        }
        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| SpError::Executor(e.to_string()))?;
            Ok(Self {
                workers,
                pool: Some(Arc::new(pool)),
            })
        }
        #[cfg(not(feature = "parallel"))]
        {
            Ok(Self::sequential())
        }
    }

    /// One worker per available core.
    pub fn available() -> Result<Self> {
        let n = std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1);
        Self::with_workers(n)
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Evaluates `f(0..n)` and returns the results in index order. When
    /// several indices fail, the error of the lowest index is returned.
    pub fn map<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            let out: Vec<Result<T>> = pool.install(|| (0..n).into_par_iter().map(&f).collect());
            return out.into_iter().collect();
        }
        (0..n).map(f).collect()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::sequential()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_results() {
        let ex = Executor::with_workers(4).unwrap();
        let v = ex.map(1000, |i| Ok(i * 2)).unwrap();
        assert_eq!(v, (0..1000).map(|i| i * 2).collect::<Vec<_>>());
    }

    #[test]
    fn lowest_index_error_wins() {
        let ex = Executor::with_workers(3).unwrap();
        let r = ex.map(100, |i| {
            if i % 10 == 7 {
                Err(crate::SpError::InvalidArgument(format!("{i}")))
            } else {
                Ok(i)
            }
        });
        assert_eq!(r.unwrap_err(), crate::SpError::InvalidArgument("7".into()));
    }
}
