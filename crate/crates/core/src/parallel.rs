//! Document-level parallelism with a sequential fallback.
//!
//! With the `parallel` feature enabled and `jobs > 1`, work runs on a
//! dedicated rayon pool. Results always come back in input order, so every
//! reduction done by callers happens in a fixed sequence and outputs are
//! identical for any job count.

#[cfg(feature = "parallel")]
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct Parallelism {
    jobs: usize,
    #[cfg(feature = "parallel")]
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Parallelism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Parallelism").field("jobs", &self.jobs).finish()
    }
}

impl Default for Parallelism {
    fn default() -> Self {
        Parallelism::sequential()
    }
}

impl Parallelism {
    pub fn sequential() -> Self {
        Parallelism {
            jobs: 1,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    pub fn new(jobs: usize) -> Result<Self> {
        if jobs == 0 {
            return Err(Error::InvalidArgument("jobs must be at least 1".into()));
        }
        if jobs == 1 {
            return Ok(Parallelism::sequential());
        }
        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(Parallelism {
                jobs,
                pool: Some(Arc::new(pool)),
            })
        }
        #[cfg(not(feature = "parallel"))]
        {
            Ok(Parallelism { jobs })
        }
    }

    pub fn jobs(&self) -> usize {
        self.jobs
    }

    /// Order-preserving map over a slice; `f` receives the item index.
    pub fn map<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(usize, &T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect());
        }
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}
