//! Rayon-backed fan-out.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuildError, ThreadPoolBuilder};
use risorch_core::fanout::Fanout;

/// Runs work items on a dedicated pool; results keep index order.
pub struct Pool {
    pool: ThreadPool,
}

impl Pool {
    /// `workers = None` uses the machine's parallelism.
    pub fn new(workers: Option<usize>) -> Result<Self, ThreadPoolBuildError> {
        let mut b = ThreadPoolBuilder::new();
        if let Some(n) = workers {
            b = b.num_threads(n.max(1));
        }
        Ok(Self { pool: b.build()? })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Fanout for Pool {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}
