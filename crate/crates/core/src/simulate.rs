//! Euler–Maruyama with an overshoot policy that never leaves the state space.
//!
//! A proposal that lands on or beyond the boundary is discarded and the
//! Gaussian increment redrawn (up to [`MAX_REDRAWS`] times); after that the
//! step is split into two half steps, recursively. Reflection or clamping
//! would pile up mass next to the boundary, where the true density vanishes
//! quadratically.
//!
//! Ensembles are cut into fixed chunks of [`CHUNK_PATHS`] paths. Each chunk
//! accumulates Welford statistics in path order and chunks are merged by a
//! fixed pairwise tree, so the floating-point result does not depend on how
//! chunks are scheduled.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::process::ProcessSpec;
use crate::rng::PathRng;

pub const MAX_REDRAWS: usize = 100;
pub const MAX_HALVINGS: u32 = 40;
pub const CHUNK_PATHS: usize = 64;

/// One discretized trajectory on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathSample {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub seed: u64,
    pub dt: f64,
}

/// One step of size `dt` from `(x, t)` driven by the increment `dw`.
///
/// Extra normals for redraws come from `rng`.
pub fn step(spec: &ProcessSpec, x: f64, t: f64, dt: f64, dw: f64, rng: &mut PathRng) -> Result<f64> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument("dt must be positive and finite"));
    }
    if !dw.is_finite() {
        return Err(Error::InvalidArgument("increment must be finite"));
    }
    spec.drift(x, t)?;
    if let Some(horizon) = spec.horizon() {
        if t + dt > horizon * (1.0 + 1e-12) {
            return Err(Error::Horizon { t: t + dt, horizon });
        }
    }
    Ok(advance(spec, x, t, dt, dw, rng, 0))
}

fn advance(spec: &ProcessSpec, x: f64, t: f64, dt: f64, mut dw: f64, rng: &mut PathRng, depth: u32) -> f64 {
    let mu = spec.drift_unchecked(x, t);
    let t1 = t + dt;
    for _ in 0..=MAX_REDRAWS {
        let y = x + mu * dt + dw;
        if spec.contains(y, t1) {
            return y;
        }
        dw = libm::sqrt(dt) * rng.normal();
    }
    if depth < MAX_HALVINGS {
        let h = 0.5 * dt;
        let mid = advance(spec, x, t, h, libm::sqrt(h) * rng.normal(), rng, depth + 1);
        return advance(spec, mid, t + h, h, libm::sqrt(h) * rng.normal(), rng, depth + 1);
    }
    // last resort: stay put, or keep half the depth if the boundary moved past x
    let b = spec.boundary();
    if b.depth(x, t1) > 0.0 {
        x
    } else {
        let keep = 0.5 * b.depth(x, t);
        match b.side {
            crate::process::BoundarySide::UpperBarrier => b.position_at(t1) - keep,
            crate::process::BoundarySide::LowerBarrier => b.position_at(t1) + keep,
        }
    }
}

// first step out of an entrance point at the origin: locally a 3-d Bessel motion
fn leave_origin(dt: f64, normals: [f64; 3]) -> f64 {
    let r2: f64 = normals.iter().map(|z| z * z).sum();
    libm::sqrt(dt * r2)
}

fn step_count(spec: &ProcessSpec, dt: f64, t_end: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument("dt must be positive and finite"));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidTime { t: t_end });
    }
    let n = libm::round(t_end / dt);
    if libm::fabs(n * dt - t_end) > 1e-9 * t_end {
        return Err(Error::InvalidArgument("t_end must be a whole number of steps"));
    }
    if let Some(horizon) = spec.horizon() {
        if t_end > horizon - dt + 1e-9 * dt {
            return Err(Error::Horizon { t: t_end, horizon });
        }
    }
    Ok(n as usize)
}

/// Driving noise for one path: `substeps` normals summed per step.
///
/// Running the same seed with `dt·k` and `substeps·k` reuses the fine
/// path's normals, which couples different step sizes.
struct Driver {
    rng: PathRng,
    substeps: usize,
}

impl Driver {
    fn increment(&mut self, dt: f64) -> f64 {
        let mut s = 0.0;
        for _ in 0..self.substeps {
            s += self.rng.normal();
        }
        libm::sqrt(dt / self.substeps as f64) * s
    }
}

fn run_path<F: FnMut(usize, f64, f64)>(spec: &ProcessSpec, dt: f64, n_steps: usize, driver: &mut Driver, mut visit: F) {
    let mut x = spec.x0();
    visit(0, 0.0, x);
    for k in 0..n_steps {
        let t = k as f64 * dt;
        x = if !spec.contains(x, t) {
            let z = [driver.rng.normal(), driver.rng.normal(), driver.rng.normal()];
            // keep the normal count per step aligned with the coupled driver
            for _ in 3..driver.substeps {
                driver.rng.normal();
            }
            leave_origin(dt, z)
        } else {
            let dw = driver.increment(dt);
            advance(spec, x, t, dt, dw, &mut driver.rng, 0)
        };
        visit(k + 1, (k + 1) as f64 * dt, x);
    }
}

/// Full trajectory on `0, dt, …, t_end`, using stream 0 of `seed`.
///
/// A start on the boundary (excursion or meander from the origin) leaves it
/// with one exact 3-d Bessel step.
pub fn simulate_path(spec: &ProcessSpec, dt: f64, t_end: f64, seed: u64) -> Result<PathSample> {
    let n = step_count(spec, dt, t_end)?;
    let mut driver = Driver { rng: PathRng::new(seed, 0), substeps: 1 };
    let mut times = Vec::with_capacity(n + 1);
    let mut positions = Vec::with_capacity(n + 1);
    run_path(spec, dt, n, &mut driver, |_, t, x| {
        times.push(t);
        positions.push(x);
    });
    Ok(PathSample { times, positions, seed, dt })
}

/// Ensemble settings; path `i` uses stream `i` of `base_seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub dt: f64,
    pub t_end: f64,
    pub n_paths: usize,
    pub base_seed: u64,
    /// Statistics are recorded every `record_every` steps and at `t_end`.
    pub record_every: usize,
    /// Normals summed per step; see the coupling note on [`Driver`].
    pub substeps: usize,
}

impl EnsembleConfig {
    pub fn new(dt: f64, t_end: f64, n_paths: usize, base_seed: u64) -> Self {
        EnsembleConfig { dt, t_end, n_paths, base_seed, record_every: 1, substeps: 1 }
    }

    pub fn chunk_count(&self) -> usize {
        self.n_paths.div_ceil(CHUNK_PATHS)
    }

    fn validate(&self, spec: &ProcessSpec) -> Result<usize> {
        if self.n_paths < 2 {
            return Err(Error::InvalidArgument("an ensemble needs at least 2 paths"));
        }
        if self.record_every == 0 || self.substeps == 0 {
            return Err(Error::InvalidArgument("record_every and substeps must be >= 1"));
        }
        step_count(spec, self.dt, self.t_end)
    }

    fn grid(&self, n_steps: usize) -> Vec<usize> {
        let mut g: Vec<usize> = (0..=n_steps).step_by(self.record_every).collect();
        if *g.last().expect("grid starts at 0") != n_steps {
            g.push(n_steps);
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(a: Welford, b: Welford) -> Welford {
        if a.n == 0.0 {
            return b;
        }
        if b.n == 0.0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        Welford { n, mean: a.mean + d * b.n / n, m2: a.m2 + b.m2 + d * d * a.n * b.n / n }
    }
}

/// Partial statistics of a contiguous block of paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkStats {
    acc: Vec<Welford>,
    endpoints: Vec<f64>,
}

/// Simulate chunk `index` (paths `64·index ..`) of an ensemble.
pub fn run_chunk(spec: &ProcessSpec, cfg: &EnsembleConfig, index: usize) -> Result<ChunkStats> {
    let n_steps = cfg.validate(spec)?;
    let grid = cfg.grid(n_steps);
    let first = index * CHUNK_PATHS;
    let last = (first + CHUNK_PATHS).min(cfg.n_paths);
    if first >= last {
        return Err(Error::InvalidArgument("chunk index beyond the ensemble"));
    }
    let mut acc = alloc::vec![Welford::default(); grid.len()];
    let mut endpoints = Vec::with_capacity(last - first);
    for path in first..last {
        let mut driver = Driver { rng: PathRng::new(cfg.base_seed, path as u64), substeps: cfg.substeps };
        let mut slot = 0;
        let mut end = f64::NAN;
        run_path(spec, cfg.dt, n_steps, &mut driver, |k, _, x| {
            if slot < grid.len() && grid[slot] == k {
                acc[slot].push(x);
                slot += 1;
            }
            end = x;
        });
        endpoints.push(end);
    }
    Ok(ChunkStats { acc, endpoints })
}

/// Merge chunk statistics (given in chunk order) by a fixed pairwise tree.
pub fn merge_chunks(mut chunks: Vec<ChunkStats>) -> Option<ChunkStats> {
    fn tree(chunks: &mut [Option<ChunkStats>]) -> ChunkStats {
        if chunks.len() == 1 {
            return chunks[0].take().expect("each chunk merged once");
        }
        let (l, r) = chunks.split_at_mut(chunks.len() / 2);
        let a = tree(l);
        let b = tree(r);
        let acc = a.acc.iter().zip(&b.acc).map(|(x, y)| Welford::merge(*x, *y)).collect();
        let mut endpoints = a.endpoints;
        endpoints.extend(b.endpoints);
        ChunkStats { acc, endpoints }
    }
    if chunks.is_empty() {
        return None;
    }
    let mut slots: Vec<Option<ChunkStats>> = chunks.drain(..).map(Some).collect();
    Some(tree(&mut slots))
}

/// Per-time ensemble mean and variance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleStats {
    pub t_grid: Vec<f64>,
    pub mean_hat: Vec<f64>,
    /// Unbiased sample variance.
    pub var_hat: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_paths: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRun {
    pub stats: EnsembleStats,
    /// Final positions in path order.
    pub endpoints: Vec<f64>,
}

/// Turn merged chunk statistics into the public summary.
pub fn finish_ensemble(spec: &ProcessSpec, cfg: &EnsembleConfig, merged: ChunkStats) -> Result<EnsembleRun> {
    let n_steps = cfg.validate(spec)?;
    let grid = cfg.grid(n_steps);
    let n = cfg.n_paths as f64;
    let t_grid = grid.iter().map(|&k| k as f64 * cfg.dt).collect();
    let mean_hat = merged.acc.iter().map(|w| w.mean).collect();
    let var_hat: Vec<f64> = merged.acc.iter().map(|w| (w.m2 / (w.n - 1.0)).max(0.0)).collect();
    let stderr = var_hat.iter().map(|v| libm::sqrt(v / n)).collect();
    Ok(EnsembleRun {
        stats: EnsembleStats { t_grid, mean_hat, var_hat, stderr, n_paths: cfg.n_paths },
        endpoints: merged.endpoints,
    })
}

/// Single-threaded ensemble; identical bits to any parallel schedule of
/// [`run_chunk`] followed by [`merge_chunks`].
pub fn simulate_ensemble(spec: &ProcessSpec, cfg: &EnsembleConfig) -> Result<EnsembleRun> {
    cfg.validate(spec)?;
    let chunks = (0..cfg.chunk_count()).map(|i| run_chunk(spec, cfg, i)).collect::<Result<Vec<_>>>()?;
    let merged = merge_chunks(chunks).expect("at least one chunk");
    finish_ensemble(spec, cfg, merged)
}

/// Path `index` of an ensemble, recorded at every step; the same draws
/// [`run_chunk`] uses for that path.
pub fn ensemble_path(spec: &ProcessSpec, cfg: &EnsembleConfig, index: usize) -> Result<PathSample> {
    let n = cfg.validate(spec)?;
    if index >= cfg.n_paths {
        return Err(Error::InvalidArgument("path index beyond the ensemble"));
    }
    let mut driver = Driver { rng: PathRng::new(cfg.base_seed, index as u64), substeps: cfg.substeps };
    let mut times = Vec::with_capacity(n + 1);
    let mut positions = Vec::with_capacity(n + 1);
    run_path(spec, cfg.dt, n, &mut driver, |_, t, x| {
        times.push(t);
        positions.push(x);
    });
    Ok(PathSample { times, positions, seed: cfg.base_seed, dt: cfg.dt })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ensemble_path_matches_endpoints() {
        let spec = ProcessSpec::LineAB { alpha: 0.5, beta: 1.0 };
        let cfg = EnsembleConfig::new(1e-2, 1.0, 70, 5);
        let run = simulate_ensemble(&spec, &cfg).unwrap();
        for i in [0, 63, 64, 69] {
            let p = ensemble_path(&spec, &cfg, i).unwrap();
            assert_eq!(p.positions.last().copied(), Some(run.endpoints[i]));
        }
        assert!(ensemble_path(&spec, &cfg, 70).is_err());
    }

    #[test]
    fn deterministic_step() {
        let spec = ProcessSpec::TabooI { a: 1.0 };
        let mut rng = PathRng::new(0, 0);
        let y = step(&spec, -5.0, 0.0, 1e-3, 0.0, &mut rng).unwrap();
        assert!(libm::fabs(y - (-5.0 - 1e-3 / 6.0)) < 1e-15);
    }

    #[test]
    fn overshoot_stays_inside() {
        let spec = ProcessSpec::TabooI { a: 1.0 };
        let mut rng = PathRng::new(1, 0);
        for _ in 0..100 {
            let y = step(&spec, 0.999, 0.0, 1e-3, 0.5, &mut rng).unwrap();
            assert!(y < 1.0);
        }
        let coth = ProcessSpec::CothII { a: 1.0, mu: -1.0 };
        let y = step(&coth, 1.0 - 1e-10, 0.0, 1e-3, 0.0, &mut rng).unwrap();
        assert!(y.is_finite() && y < 1.0);
    }

    #[test]
    fn path_invariants() {
        let spec = ProcessSpec::ExcursionE { x0: 0.0, x_end: 0.0, horizon: 1.0 };
        let p = simulate_path(&spec, 1e-3, 1.0 - 1e-3, 9).unwrap();
        assert_eq!(p.positions.len(), 1000);
        assert!(p.positions[1..].iter().all(|&x| x > 0.0));
        assert_eq!(p, simulate_path(&spec, 1e-3, 1.0 - 1e-3, 9).unwrap());
        assert!(simulate_path(&spec, 1e-3, 1.0, 9).is_err());
    }

    #[test]
    fn two_paths_are_enough() {
        let spec = ProcessSpec::TabooI { a: 1.0 };
        let run = simulate_ensemble(&spec, &EnsembleConfig::new(1e-2, 1.0, 2, 3)).unwrap();
        assert!(run.stats.stderr.iter().all(|s| s.is_finite()));
        assert_eq!(run.stats.var_hat[0], 0.0);
    }

    #[test]
    fn merge_order_is_fixed() {
        let spec = ProcessSpec::LineAB { alpha: 0.5, beta: 1.0 };
        let cfg = EnsembleConfig { record_every: 10, ..EnsembleConfig::new(1e-2, 1.0, 300, 5) };
        let serial = simulate_ensemble(&spec, &cfg).unwrap();
        let mut chunks: Vec<_> =
            (0..cfg.chunk_count()).rev().map(|i| (i, run_chunk(&spec, &cfg, i).unwrap())).collect();
        chunks.sort_by_key(|c| c.0);
        let merged = merge_chunks(chunks.into_iter().map(|c| c.1).collect()).unwrap();
        assert_eq!(finish_ensemble(&spec, &cfg, merged).unwrap(), serial);
    }
}
