use qkdstat_core::optimizer::Executor;
use rayon::prelude::*;

/// Runs optimizer batches on the current rayon pool. Results come back in
/// index order, so output does not depend on scheduling.
#[derive(Debug, Clone, Copy, Default)]
pub struct RayonExecutor;

impl Executor for RayonExecutor {
    fn map(&self, count: usize, f: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64> {
        (0..count).into_par_iter().map(f).collect()
    }
}

/// A pool with `jobs` workers (0 = rayon's default).
pub fn pool(jobs: usize) -> Result<rayon::ThreadPool, crate::CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| crate::CliError::config(format!("--jobs: {e}")))
}
