//! Worker pool for independent work items.

use rayon::prelude::*;

use crate::error::Result;

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "TDRW_THREADS";

pub struct Runner {
    pool: rayon::ThreadPool,
}

/// `--threads`, else `TDRW_THREADS`, else the available parallelism.
pub fn resolve_threads(flag: Option<usize>) -> usize {
    flag.filter(|&n| n > 0)
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse().ok()).filter(|&n| n > 0))
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

impl Runner {
    pub fn new(threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build()?;
        Ok(Runner { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// `f(0), ..., f(n-1)` on the pool, returned in index order. The first
    /// error by index wins.
    pub fn map<T, F>(&self, n: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        let results: Vec<Result<T>> = self.pool.install(|| (0..n).into_par_iter().map(&f).collect());
        results.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_thread_count() {
        let a = Runner::new(1).unwrap().map(100, |i| Ok(i * i)).unwrap();
        let b = Runner::new(4).unwrap().map(100, |i| Ok(i * i)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[7], 49);
    }

    #[test]
    fn flag_beats_default() {
        assert_eq!(resolve_threads(Some(3)), 3);
        assert!(resolve_threads(None) >= 1);
    }
}
