use alloc::vec::Vec;

use super::cdf::CdfTable;
use super::check_density_time;
use crate::error::{Error, Result};
use crate::numerics::gauss_legendre_16;
use crate::process::{BoundarySide, ProcessSpec};
use crate::rng::PathRng;

/// Number of quantile cells: nodes sit at `u = k / QUANTILE_GRID`.
pub const QUANTILE_GRID: usize = 4096;

const TABLE_CELLS: usize = 2048;

/// Inverse-CDF sampler for `X(t)` with a cached monotone quantile curve.
#[derive(Debug, Clone)]
pub struct ExactSampler {
    table: CdfTable,
    u: Vec<f64>,
    x: Vec<f64>,
    slope: Vec<f64>,
}

impl ExactSampler {
    pub fn new(spec: &ProcessSpec, t: f64) -> Result<Self> {
        check_density_time(spec, t)?;
        let table = CdfTable::new(spec, t, TABLE_CELLS)?;
        let total = table.total();
        let mut u = Vec::with_capacity(QUANTILE_GRID - 1);
        let mut x = Vec::with_capacity(QUANTILE_GRID - 1);
        for k in 1..QUANTILE_GRID {
            let uk = k as f64 / QUANTILE_GRID as f64;
            u.push(uk);
            x.push(invert_in_table(&table, uk * total)?);
        }
        let slope = pchip_slopes(&u, &x);
        Ok(ExactSampler { table, u, x, slope })
    }

    pub fn table(&self) -> &CdfTable {
        &self.table
    }

    /// Quantile function on `(0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument("quantile level must lie in (0, 1)"));
        }
        let first = self.u[0];
        let last = *self.u.last().expect("nodes");
        if p < first || p > last {
            return self.tail_quantile(p);
        }
        let i = self.u.partition_point(|&v| v <= p).saturating_sub(1).min(self.u.len() - 2);
        Ok(hermite(&self.u, &self.x, &self.slope, i, p))
    }

    // bisection on the exact CDF beyond the outermost nodes
    fn tail_quantile(&self, p: f64) -> Result<f64> {
        let target = p * self.table.total();
        let side = self.table.spec().boundary().side;
        let (mut lo, mut hi) = if p < self.u[0] {
            let hi = self.x[0];
            let lo = match side {
                BoundarySide::LowerBarrier => self.table.spec().boundary().position_at(self.table.time()),
                BoundarySide::UpperBarrier => {
                    let step = (self.x[1] - self.x[0]).max(1e-12) * 64.0;
                    let mut lo = hi - step;
                    let mut k = 0;
                    while self.table.eval(lo)? > target && k < 200 {
                        lo -= step * libm::pow(2.0, k as f64);
                        k += 1;
                    }
                    lo
                }
            };
            (lo, hi)
        } else {
            let lo = *self.x.last().expect("nodes");
            let hi = match side {
                BoundarySide::UpperBarrier => self.table.spec().boundary().position_at(self.table.time()),
                BoundarySide::LowerBarrier => {
                    let n = self.x.len();
                    let step = (self.x[n - 1] - self.x[n - 2]).max(1e-12) * 64.0;
                    let mut hi = lo + step;
                    let mut k = 0;
                    while self.table.eval(hi)? < target && k < 200 {
                        hi += step * libm::pow(2.0, k as f64);
                        k += 1;
                    }
                    hi
                }
            };
            (lo, hi)
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if !(lo < mid && mid < hi) {
                break;
            }
            if self.table.eval(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `n` independent draws from stream 0 of `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = PathRng::new(seed, 0);
        (0..n).map(|_| self.quantile(rng.uniform())).collect()
    }
}

/// `n ≥ 1` independent draws from the law of `X(t)`, deterministic in `seed`.
pub fn sample_exact(spec: &ProcessSpec, t: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1"));
    }
    ExactSampler::new(spec, t)?.sample(n, seed)
}

// solve F(x) = target inside the table, Newton steps guarded by bisection
fn invert_in_table(table: &CdfTable, target: f64) -> Result<f64> {
    let cum = table.cumulative();
    let nodes = table.nodes();
    if target <= cum[0] || target >= cum[cum.len() - 1] {
        return Err(Error::InvalidArgument("quantile node falls outside the tabulated support"));
    }
    let i = cum.partition_point(|&c| c <= target).saturating_sub(1).min(nodes.len() - 2);
    let (mut a, mut b) = (nodes[i], nodes[i + 1]);
    let base = cum[i];
    let left = nodes[i];
    let f = |x: f64| base + gauss_legendre_16(|y| table.density(y), left, x) - target;
    let mut x = a + (b - a) * (target - base) / (cum[i + 1] - base).max(f64::MIN_POSITIVE);
    for _ in 0..100 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let p = table.density(x);
        let newton = x - fx / p;
        x = if p > 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if (b - a) <= 1e-15 * (1.0 + libm::fabs(x)) || libm::fabs(fx) < 1e-16 {
            break;
        }
    }
    Ok(x)
}

// Fritsch–Carlson monotone slopes
fn pchip_slopes(u: &[f64], x: &[f64]) -> Vec<f64> {
    let n = u.len();
    let delta: Vec<f64> = (0..n - 1).map(|i| (x[i + 1] - x[i]) / (u[i + 1] - u[i])).collect();
    let mut m = alloc::vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        let (d0, d1) = (delta[i - 1], delta[i]);
        m[i] = if d0 * d1 <= 0.0 {
            0.0
        } else {
            // weighted harmonic mean keeps the interpolant monotone
            let h0 = u[i] - u[i - 1];
            let h1 = u[i + 1] - u[i];
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            (w1 + w2) / (w1 / d0 + w2 / d1)
        };
    }
    m
}

fn hermite(u: &[f64], x: &[f64], m: &[f64], i: usize, p: f64) -> f64 {
    let h = u[i + 1] - u[i];
    let s = (p - u[i]) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * x[i]
        + (s3 - 2.0 * s2 + s) * h * m[i]
        + (-2.0 * s3 + 3.0 * s2) * x[i + 1]
        + (s3 - s2) * h * m[i + 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_request() {
        let spec = ProcessSpec::TabooI { a: 1.0 };
        assert!(sample_exact(&spec, 1.0, 0, 1).is_err());
    }

    #[test]
    fn quantiles_invert_cdf() {
        let spec = ProcessSpec::MeanderM { mu: -0.5, x0: 0.2, horizon: 1.0 };
        let s = ExactSampler::new(&spec, 0.6).unwrap();
        // interpolated between nodes
        for &p in &[0.01, 0.3, 0.77, 0.9999] {
            let x = s.quantile(p).unwrap();
            let f = crate::density::cdf(&spec, x, 0.6).unwrap();
            assert!(libm::fabs(f - p) < 1e-6, "p={p} x={x} F={f}");
        }
        // bisection tails and the nodes themselves are exact to quadrature accuracy
        for &p in &[1e-6, 0.25, 0.5, 1.0 - 1e-7] {
            let x = s.quantile(p).unwrap();
            let f = crate::density::cdf(&spec, x, 0.6).unwrap();
            assert!(libm::fabs(f - p) < 1e-9, "p={p} x={x} F={f}");
        }
    }
}
