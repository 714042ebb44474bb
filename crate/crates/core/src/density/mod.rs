//! Closed-form transition densities from the process's starting point.
//!
//! Each density is evaluated as one `exp` of a sum of logs; the image
//! bracket `e^{-u} - e^{-v}` is written as `e^{-u}(1 - e^{-(v-u)})` with the
//! difference `v - u` simplified by hand, so nothing cancels near the
//! boundary.

mod cdf;
mod moments;
pub mod printed;
mod sampler;

use core::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::meander;
use crate::numerics::{ln_sinhc, log1mexp, log_sinh};
use crate::process::{BoundarySide, ProcessSpec};

pub use cdf::{cdf, integrate_density, CdfTable, DENSITY_ABS_TOL, DENSITY_REL_TOL};
pub use moments::{
    asymptotics, closed_moments, mean, moments, numeric_moments, variance, AsymptoticLaw, MomentPair, MomentProvenance,
};
pub use sampler::{sample_exact, ExactSampler, QUANTILE_GRID};

/// Admissible evaluation times: `t > 0`, below the horizon for the
/// excursion, up to and including it for the meander.
pub(crate) fn check_density_time(spec: &ProcessSpec, t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidTime { t });
    }
    match *spec {
        ProcessSpec::ExcursionE { horizon, .. } if t >= horizon => Err(Error::Horizon { t, horizon }),
        ProcessSpec::MeanderM { horizon, .. } if t > horizon => Err(Error::Horizon { t, horizon }),
        _ => Ok(()),
    }
}

/// `ln p(x, t)`; `-∞` outside the state space and on the boundary.
pub fn log_pdf(spec: &ProcessSpec, x: f64, t: f64) -> Result<f64> {
    check_density_time(spec, t)?;
    let d = spec.boundary().depth(x, t);
    if !(d > 0.0) || !x.is_finite() {
        return Ok(f64::NEG_INFINITY);
    }
    let gauss = -0.5 * libm::log(2.0 * PI * t);
    Ok(match *spec {
        ProcessSpec::TabooI { a } => libm::log(d / a) + gauss - x * x / (2.0 * t) + log1mexp(2.0 * a * d / t),
        ProcessSpec::CothII { a, mu } => {
            let m = libm::fabs(mu);
            ln_sinh_pos(m * d) - ln_sinh_pos(m * a) - 0.5 * mu * mu * t + gauss - x * x / (2.0 * t)
                + log1mexp(2.0 * a * d / t)
        }
        ProcessSpec::LineAB { alpha, beta } => {
            let m = libm::fabs(alpha);
            ln_sinh_pos(m * d) - ln_sinh_pos(m * beta) + alpha * x - alpha * alpha * t + gauss - x * x / (2.0 * t)
                + log1mexp(2.0 * beta * d / t)
        }
        ProcessSpec::LineABStar { alpha, beta } => {
            let y = x - alpha * t;
            libm::log(d / beta) + gauss - y * y / (2.0 * t) + log1mexp(2.0 * beta * d / t)
        }
        ProcessSpec::ExcursionE { x0, x_end, horizon } => {
            let s = horizon - t;
            0.5 * libm::log(horizon / (2.0 * PI * t * s)) + LN_2 + libm::log(x * x * horizon / (s * t))
                - t * x_end * x_end / (2.0 * horizon * s)
                - horizon * x * x / (2.0 * t * s)
                - s * x0 * x0 / (2.0 * t * horizon)
                + ln_sinhc(x * x_end / s)
                + ln_sinhc(x * x0 / t)
                - ln_sinhc(x0 * x_end / horizon)
        }
        ProcessSpec::MeanderM { mu, x0, horizon } => {
            let s = horizon - t;
            let ln_pi_x = if s == 0.0 { 0.0 } else { meander::survival(x, s, mu).log_d - LN_2 };
            mu * (x - x0) - 0.5 * mu * mu * t + LN_2 + gauss - (x * x + x0 * x0) / (2.0 * t)
                + libm::log(x / t)
                + ln_sinhc(x * x0 / t)
                + ln_pi_x
                - meander::log_pi_over_x(x0, horizon, mu)
        }
    })
}

fn ln_sinh_pos(v: f64) -> f64 {
    log_sinh(v).unwrap_or(f64::NEG_INFINITY)
}

/// Transition density `p(x, t)`; zero outside the state space.
pub fn pdf(spec: &ProcessSpec, x: f64, t: f64) -> Result<f64> {
    Ok(libm::exp(log_pdf(spec, x, t)?))
}

/// Rough location and scale used to place quadrature panels.
pub(crate) fn effective_support(spec: &ProcessSpec, t: f64) -> (f64, f64) {
    let b = spec.boundary();
    let root = libm::sqrt(t);
    match b.side {
        BoundarySide::UpperBarrier => {
            let edge = b.position_at(t);
            let (m, sd) = match moments::closed_moments(spec, t) {
                Ok(p) => (p.mean, libm::sqrt(p.variance)),
                Err(_) => (edge - root, root),
            };
            let lo = (m - 40.0 * sd.max(1e-300)).min(edge - 40.0 * root);
            (lo, edge)
        }
        BoundarySide::LowerBarrier => {
            let hi = match *spec {
                ProcessSpec::ExcursionE { .. } => match moments::closed_moments(spec, t) {
                    Ok(p) => p.mean + 40.0 * libm::sqrt(p.variance).max(1e-3 * root),
                    Err(_) => spec.x0() + 40.0 * root,
                },
                ProcessSpec::MeanderM { mu, x0, .. } => x0 + mu.max(0.0) * t + 40.0 * root,
                _ => unreachable!(),
            };
            (0.0, hi.max(40.0 * root))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::girsanov::{image_density, TildeDensity};

    #[test]
    fn reference_shapes() {
        let taboo = ProcessSpec::TabooI { a: 1.0 };
        assert_eq!(pdf(&taboo, 1.0, 0.7).unwrap(), 0.0);
        assert_eq!(pdf(&taboo, 3.0, 0.7).unwrap(), 0.0);
        let exc = ProcessSpec::ExcursionE { x0: 0.0, x_end: 0.0, horizon: 1.0 };
        for &(x, t) in &[(0.3, 0.2), (1.1, 0.5), (0.05, 0.9)] {
            let s: f64 = 1.0 - t;
            let want = libm::sqrt(2.0 / (PI * t * t * t * s * s * s)) * x * x * libm::exp(-x * x / (2.0 * t * s));
            assert!(libm::fabs(pdf(&exc, x, t).unwrap() / want - 1.0) < 1e-13);
        }
        let m = ProcessSpec::MeanderM { mu: 0.0, x0: 0.0, horizon: 1.0 };
        for &x in &[0.01, 0.7, 2.5] {
            let want = x * libm::exp(-x * x / 2.0);
            assert!(libm::fabs(pdf(&m, x, 1.0).unwrap() / want - 1.0) < 1e-13);
        }
    }

    #[test]
    fn image_construction_matches_closed_form() {
        let specs = [
            ProcessSpec::TabooI { a: 1.0 },
            ProcessSpec::CothII { a: 1.0, mu: -1.0 },
            ProcessSpec::LineAB { alpha: 0.5, beta: 1.0 },
            ProcessSpec::LineAB { alpha: -0.5, beta: 1.0 },
            ProcessSpec::LineABStar { alpha: -0.5, beta: 1.0 },
            ProcessSpec::ExcursionE { x0: 0.3, x_end: 0.7, horizon: 1.0 },
            ProcessSpec::MeanderM { mu: 1.0, x0: 0.4, horizon: 1.0 },
        ];
        for spec in specs {
            let tilde = TildeDensity::new(spec).unwrap();
            let b = spec.boundary();
            for &t in &[0.1, 0.5, 0.9] {
                let (lo, hi) = effective_support(&spec, t);
                let (lo, hi) = (lo.max(b.position_at(t) - 8.0), hi.min(b.position_at(t) + 8.0));
                for k in 1..200 {
                    let x = lo + (hi - lo) * k as f64 / 200.0;
                    let p = pdf(&spec, x, t).unwrap();
                    let q = image_density(&tilde, &b, x, t).unwrap();
                    assert!(libm::fabs(p - q) <= 1e-12 * (1.0 + p), "{spec:?} x={x} t={t}: {p} {q}");
                }
            }
        }
    }
}
