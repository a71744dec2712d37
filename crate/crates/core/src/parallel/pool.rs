/// Fixed-size worker pool mapping an index range to results in index order.
///
/// Output order never depends on scheduling, so the reduction that follows is
/// identical for any worker count. Without the `parallel` feature (e.g. in
/// the browser build) the pool runs on the calling thread.
pub struct WorkerPool {
    workers: usize,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl WorkerPool {
    pub fn new(workers: usize) -> Self {
        let workers = workers.max(1);
        #[cfg(feature = "parallel")]
        {
            let pool = (workers > 1)
                .then(|| rayon::ThreadPoolBuilder::new().num_threads(workers).build().ok())
                .flatten();
            Self { workers, pool }
        }
        #[cfg(not(feature = "parallel"))]
        Self { workers }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
        (0..n).map(f).collect()
    }
}
