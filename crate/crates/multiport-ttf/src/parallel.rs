//! Thread pool setup and order-preserving parallel drivers.

use multiport_ttf_core::montecarlo::BlockTask;
use multiport_ttf_core::sim::{finish_mse, ExperimentSpec, MseEstimate};
use multiport_ttf_core::ttf::{TtfMonteCarlo, TtfResult};
use multiport_ttf_core::Result;
use rayon::prelude::*;

pub const THREADS_ENV: &str = "MULTIPORT_TTF_THREADS";

/// Thread cap from the environment; unset, empty or `0` means automatic.
pub fn threads_from_env() -> std::result::Result<usize, String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| format!("{THREADS_ENV} must be a non-negative integer, got {v:?}")),
        _ => Ok(0),
    }
}

pub fn build_pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("failed to start worker threads")
}

/// Runs every block of `task` on the current pool, returning outputs in block order.
pub fn run_blocks<T>(task: &T) -> Vec<T::Output>
where
    T: BlockTask + Sync,
    T::Output: Send,
{
    (0..task.plan().n_blocks())
        .into_par_iter()
        .map(|k| task.run_block(k))
        .collect()
}

pub fn ttf_monte_carlo(task: &TtfMonteCarlo) -> Result<TtfResult> {
    task.finish(run_blocks(task))
}

pub fn empirical_mse(spec: &ExperimentSpec) -> MseEstimate {
    finish_mse(run_blocks(spec))
}

/// Order-preserving parallel map over sweep points.
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use multiport_ttf_core::montecarlo::run_sequential;
    use multiport_ttf_core::povm::amplitudes_binomial;

    #[test]
    fn parallel_matches_sequential() {
        let b = amplitudes_binomial(3, 0.25).unwrap();
        let task = TtfMonteCarlo::new(&b, 20_000, 5).unwrap().with_block_size(1500);
        let seq = task.finish(run_sequential(&task)).unwrap();
        for threads in [1, 3, 8] {
            let par = build_pool(threads).install(|| ttf_monte_carlo(&task)).unwrap();
            assert_eq!(par, seq);
        }
    }
}
