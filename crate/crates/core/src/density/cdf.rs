use alloc::vec::Vec;

use super::{check_density_time, effective_support, pdf};
use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre_16, integrate, Interval, QuadratureResult};
use crate::process::{BoundarySide, ProcessSpec};

pub const DENSITY_ABS_TOL: f64 = 1e-14;
pub const DENSITY_REL_TOL: f64 = 1e-12;

const CORE_PANELS: usize = 8;

// panel edges covering the state space, infinite ends included
fn breakpoints(spec: &ProcessSpec, t: f64) -> Vec<f64> {
    let (lo, hi) = effective_support(spec, t);
    let mut pts = Vec::with_capacity(CORE_PANELS + 3);
    match spec.boundary().side {
        BoundarySide::UpperBarrier => {
            pts.push(f64::NEG_INFINITY);
            for k in 0..=CORE_PANELS {
                pts.push(lo + (hi - lo) * k as f64 / CORE_PANELS as f64);
            }
        }
        BoundarySide::LowerBarrier => {
            for k in 0..=CORE_PANELS {
                pts.push(lo + (hi - lo) * k as f64 / CORE_PANELS as f64);
            }
            pts.push(f64::INFINITY);
        }
    }
    pts
}

/// `∫ g(x) p(x, t) dx` over `[lo, hi]` intersected with the state space.
pub fn integrate_density<G: FnMut(f64) -> f64>(
    spec: &ProcessSpec,
    t: f64,
    lo: f64,
    hi: f64,
    mut g: G,
) -> Result<QuadratureResult> {
    check_density_time(spec, t)?;
    let pts = breakpoints(spec, t);
    let mut total = QuadratureResult { value: 0.0, abs_error_estimate: 0.0, evaluations: 0 };
    for w in pts.windows(2) {
        let (a, b) = (w[0].max(lo), w[1].min(hi));
        let Some(iv) = Interval::new(a, b) else { continue };
        let r = integrate(
            |x| {
                let p = pdf(spec, x, t).unwrap_or(f64::NAN);
                if p == 0.0 {
                    0.0
                } else {
                    g(x) * p
                }
            },
            iv,
            DENSITY_ABS_TOL,
            DENSITY_REL_TOL,
        )?;
        total.value += r.value;
        total.abs_error_estimate += r.abs_error_estimate;
        total.evaluations += r.evaluations;
    }
    Ok(total)
}

/// `P(X(t) ≤ x)` by quadrature from the far end of the state space.
pub fn cdf(spec: &ProcessSpec, x: f64, t: f64) -> Result<f64> {
    check_density_time(spec, t)?;
    if x.is_nan() {
        return Err(Error::InvalidArgument("x is NaN"));
    }
    Ok(integrate_density(spec, t, f64::NEG_INFINITY, x, |_| 1.0)?.value)
}

/// Tabulated CDF on a uniform grid across the effective support.
///
/// Values between nodes add a 16-point Gauss–Legendre integral over the
/// partial cell; outside the grid the tails are integrated adaptively.
#[derive(Debug, Clone)]
pub struct CdfTable {
    spec: ProcessSpec,
    t: f64,
    nodes: Vec<f64>,
    cum: Vec<f64>,
    total: f64,
}

impl CdfTable {
    pub fn new(spec: &ProcessSpec, t: f64, cells: usize) -> Result<Self> {
        check_density_time(spec, t)?;
        if cells == 0 {
            return Err(Error::InvalidArgument("table needs at least one cell"));
        }
        let (lo, hi) = effective_support(spec, t);
        let nodes: Vec<f64> = (0..=cells).map(|k| lo + (hi - lo) * k as f64 / cells as f64).collect();
        let mut acc = match spec.boundary().side {
            BoundarySide::UpperBarrier => integrate_density(spec, t, f64::NEG_INFINITY, lo, |_| 1.0)?.value,
            BoundarySide::LowerBarrier => 0.0,
        };
        let mut cum = Vec::with_capacity(nodes.len());
        cum.push(acc);
        for w in nodes.windows(2) {
            let r = integrate(|x| pdf(spec, x, t).unwrap_or(f64::NAN), Interval { lo: w[0], hi: w[1] }, 1e-16, 1e-13)?;
            acc += r.value;
            cum.push(acc);
        }
        let total = match spec.boundary().side {
            BoundarySide::UpperBarrier => acc,
            BoundarySide::LowerBarrier => acc + integrate_density(spec, t, hi, f64::INFINITY, |_| 1.0)?.value,
        };
        Ok(CdfTable { spec: *spec, t, nodes, cum, total })
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Total mass over the state space (1 up to quadrature error).
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    pub(crate) fn density(&self, x: f64) -> f64 {
        pdf(&self.spec, x, self.t).unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let first = self.nodes[0];
        let last = *self.nodes.last().expect("table has nodes");
        if x.is_nan() {
            return Err(Error::InvalidArgument("x is NaN"));
        }
        if x <= first {
            return Ok(match self.spec.boundary().side {
                BoundarySide::LowerBarrier => 0.0,
                BoundarySide::UpperBarrier => {
                    integrate_density(&self.spec, self.t, f64::NEG_INFINITY, x, |_| 1.0)?.value
                }
            });
        }
        if x >= last {
            return Ok(match self.spec.boundary().side {
                BoundarySide::UpperBarrier => self.total,
                BoundarySide::LowerBarrier => {
                    self.cum[self.cum.len() - 1] + integrate_density(&self.spec, self.t, last, x, |_| 1.0)?.value
                }
            });
        }
        let i = self.cell_of(x);
        Ok(self.cum[i] + gauss_legendre_16(|y| self.density(y), self.nodes[i], x))
    }

    // index i with nodes[i] <= x < nodes[i+1]
    pub(crate) fn cell_of(&self, x: f64) -> usize {
        let i = self.nodes.partition_point(|&n| n <= x);
        i.saturating_sub(1).min(self.nodes.len() - 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_and_monotone() {
        let specs = [
            ProcessSpec::TabooI { a: 1.0 },
            ProcessSpec::CothII { a: 1.0, mu: -1.0 },
            ProcessSpec::LineAB { alpha: -0.5, beta: 1.0 },
            ProcessSpec::ExcursionE { x0: 0.0, x_end: 0.0, horizon: 1.0 },
            ProcessSpec::MeanderM { mu: 1.0, x0: 0.0, horizon: 1.0 },
        ];
        for spec in specs {
            let table = CdfTable::new(&spec, 0.5, 256).unwrap();
            assert!(libm::fabs(table.total() - 1.0) < 1e-10, "{spec:?} {}", table.total());
            let mut prev = 0.0;
            for k in 0..=400 {
                let x = -6.0 + 12.0 * k as f64 / 400.0;
                let f = table.eval(x).unwrap();
                assert!(f >= prev - 1e-15, "{spec:?} x={x}");
                prev = f;
            }
            let x = table.nodes()[100] + 1e-3;
            assert!(libm::fabs(table.eval(x).unwrap() - cdf(&spec, x, 0.5).unwrap()) < 1e-11);
        }
    }
}
