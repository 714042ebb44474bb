//! Parallel drivers for the chunked simulations in `entrance_core`.
//!
//! Work is split into the same fixed chunks the serial code uses and merged
//! in chunk order, so the worker count never changes a single bit.

use entrance_core::rng::PathRng;
use entrance_core::simulate::{self, EnsembleConfig, EnsembleRun, CHUNK_PATHS};
use entrance_core::{ProcessSpec, Result};
use rayon::prelude::*;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "ENTRANCE_DIFFUSIONS_WORKERS";

/// Worker count from [`WORKERS_ENV`], else the number of available cores.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Run `f` inside a pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Ensemble statistics computed on `workers` threads.
pub fn simulate_ensemble(spec: &ProcessSpec, cfg: &EnsembleConfig, workers: usize) -> Result<EnsembleRun> {
    let spec = spec.validate()?;
    with_workers(workers, || {
        let chunks = (0..cfg.chunk_count())
            .into_par_iter()
            .map(|i| simulate::run_chunk(&spec, cfg, i))
            .collect::<Result<Vec<_>>>()?;
        let merged = simulate::merge_chunks(chunks)
            .ok_or(entrance_core::Error::InvalidArgument("an ensemble needs at least 2 paths"))?;
        simulate::finish_ensemble(&spec, cfg, merged)
    })
}

/// Endpoints of `n` driftless Brownian paths from `x0`, built from `steps`
/// increments of size `t / steps`; path `i` uses stream `i` of `seed`.
pub fn brownian_endpoints(x0: f64, t: f64, steps: usize, n: usize, seed: u64, workers: usize) -> Vec<f64> {
    let dt = t / steps as f64;
    let sd = dt.sqrt();
    with_workers(workers, || {
        (0..n)
            .into_par_iter()
            .with_min_len(CHUNK_PATHS)
            .map(|i| {
                let mut rng = PathRng::new(seed, i as u64);
                let mut w = x0;
                for _ in 0..steps {
                    w += sd * rng.normal();
                }
                w
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worker_count_does_not_change_bits() {
        let spec = ProcessSpec::CothII { a: 1.0, mu: -1.0 };
        let cfg = EnsembleConfig { record_every: 25, ..EnsembleConfig::new(1e-2, 2.0, 333, 11) };
        let one = simulate_ensemble(&spec, &cfg, 1).unwrap();
        let four = simulate_ensemble(&spec, &cfg, 4).unwrap();
        assert_eq!(one, four);
        assert_eq!(one, simulate::simulate_ensemble(&spec, &cfg).unwrap());
        assert_eq!(brownian_endpoints(0.0, 1.0, 10, 200, 3, 1), brownian_endpoints(0.0, 1.0, 10, 200, 3, 5));
    }
}
