//! Girsanov weights along driftless paths, the unnormalized "tilde" densities
//! they induce, and the positive-image superposition that turns a tilde
//! density into the true one.
//!
//! For every family the weight is a space-time harmonic function of the
//! driftless path, `Z(t) = h(W(t), t) / h(x0, 0)`, so the closed form depends
//! on the endpoint only. Continuing `h` past the boundary gives the signed
//! tilde density `Z(x, t) φ_t(x - x0)`, which solves the forward equation on
//! the whole line and integrates to 1 there.

use core::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::meander;
use crate::numerics::{ln_sinhc, log_sinh};
use crate::process::{BoundaryInfo, ProcessSpec};
use crate::simulate::PathSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum WeightMethod {
    ClosedForm,
    PathIntegral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GirsanovWeight {
    pub value: f64,
    pub method: WeightMethod,
}

// sign and log-magnitude of a signed quantity
#[derive(Debug, Clone, Copy)]
struct Signed {
    sign: f64,
    ln: f64,
}

impl Signed {
    fn value(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * libm::exp(self.ln)
        }
    }
}

fn signum0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn ln_abs_sinh(v: f64) -> f64 {
    log_sinh(libm::fabs(v)).unwrap_or(f64::NEG_INFINITY)
}

fn check_weight_time(spec: &ProcessSpec, t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidTime { t });
    }
    if let Some(horizon) = spec.horizon() {
        if t > horizon || (t == horizon && matches!(spec, ProcessSpec::ExcursionE { .. })) {
            return Err(Error::Horizon { t, horizon });
        }
    }
    Ok(())
}

fn needs_interior_start(spec: &ProcessSpec) -> Result<()> {
    if spec.x0() > 0.0 || spec.horizon().is_none() {
        Ok(())
    } else {
        Err(Error::Unsupported {
            family: spec.family(),
            operation: "Girsanov weight from a start on the boundary (x0 = 0)",
        })
    }
}

// ln|h(x,t)/h(x0,0)| continued to the whole line
fn z_signed(spec: &ProcessSpec, x: f64, t: f64) -> Signed {
    let d = spec.boundary().depth(x, t);
    let sign = signum0(d);
    let ln = match *spec {
        ProcessSpec::TabooI { a } => libm::log(libm::fabs(d) / a),
        ProcessSpec::CothII { a, mu } => ln_abs_sinh(mu * d) - ln_abs_sinh(mu * a) - 0.5 * mu * mu * t,
        ProcessSpec::LineAB { alpha, beta } => {
            ln_abs_sinh(alpha * d) - ln_abs_sinh(alpha * beta) + alpha * x - alpha * alpha * t
        }
        ProcessSpec::LineABStar { alpha, beta } => {
            libm::log(libm::fabs(d) / beta) + alpha * x - 0.5 * alpha * alpha * t
        }
        ProcessSpec::ExcursionE { x0, x_end, horizon } => {
            let s = horizon - t;
            0.5 * libm::log(horizon / s) - (x_end * x_end + x * x) / (2.0 * s)
                + (x_end * x_end + x0 * x0) / (2.0 * horizon)
                + libm::log(libm::fabs(x) * horizon / (x0 * s))
                + ln_sinhc(x * x_end / s)
                - ln_sinhc(x0 * x_end / horizon)
        }
        ProcessSpec::MeanderM { mu, x0, horizon } => {
            let s = horizon - t;
            let ln_pi = |y: f64| {
                if s == 0.0 {
                    0.0
                } else {
                    meander::survival(y, s, mu).log_d - LN_2
                }
            };
            let ln_num = if x > 0.0 { ln_pi(x) } else { -2.0 * mu * x + ln_pi(-x) };
            mu * (x - x0) - 0.5 * mu * mu * t + ln_num - (meander::survival(x0, horizon, mu).log_d - LN_2)
        }
    };
    if sign == 0.0 {
        Signed { sign, ln: f64::NEG_INFINITY }
    } else {
        Signed { sign, ln }
    }
}

/// Closed-form weight for a driftless path ending at `w_t` at time `t`.
pub fn z_closed(spec: &ProcessSpec, w_t: f64, t: f64) -> Result<GirsanovWeight> {
    needs_interior_start(spec)?;
    check_weight_time(spec, t)?;
    if !spec.contains(w_t, t) {
        return Err(Error::OutsideStateSpace { x: w_t, t });
    }
    Ok(GirsanovWeight { value: z_signed(spec, w_t, t).value(), method: WeightMethod::ClosedForm })
}

/// Signed closed-form weight on the whole line, zero on the boundary.
///
/// Outside the state space this is the analytic continuation of the weight,
/// not a probability weight; it is what the Monte Carlo identity for the
/// tilde density needs.
pub fn z_closed_signed(spec: &ProcessSpec, w_t: f64, t: f64) -> Result<f64> {
    needs_interior_start(spec)?;
    check_weight_time(spec, t)?;
    if !w_t.is_finite() {
        return Err(Error::InvalidArgument("endpoint must be finite"));
    }
    Ok(z_signed(spec, w_t, t).value())
}

/// Left-point Itô accumulation of `∫μ dW - ½∫μ² du` along a driftless path.
#[derive(Debug, Clone)]
pub struct WeightAccumulator {
    spec: ProcessSpec,
    t: f64,
    w: f64,
    log_z: f64,
    steps: usize,
}

impl WeightAccumulator {
    pub fn new(spec: ProcessSpec) -> Result<Self> {
        needs_interior_start(&spec)?;
        Ok(WeightAccumulator { spec, t: 0.0, w: spec.x0(), log_z: 0.0, steps: 0 })
    }

    /// Advance by one increment; fails when the path leaves the state space.
    pub fn advance(&mut self, dw: f64, dt: f64) -> Result<()> {
        let mu = self.spec.drift(self.w, self.t).map_err(|_| Error::PathExited { index: self.steps })?;
        self.log_z += mu * dw - 0.5 * mu * mu * dt;
        self.w += dw;
        self.t += dt;
        self.steps += 1;
        if !self.spec.contains(self.w, self.t) {
            return Err(Error::PathExited { index: self.steps });
        }
        Ok(())
    }

    pub fn position(&self) -> f64 {
        self.w
    }

    pub fn log_weight(&self) -> f64 {
        self.log_z
    }

    pub fn weight(&self) -> GirsanovWeight {
        GirsanovWeight { value: libm::exp(self.log_z), method: WeightMethod::PathIntegral }
    }
}

/// Itô-sum weight of a stored driftless path.
///
/// A path that touches or leaves the state space yields
/// [`Error::PathExited`]: its weight under the conditioned law is zero.
pub fn z_path(spec: &ProcessSpec, path: &PathSample) -> Result<GirsanovWeight> {
    let mut acc = WeightAccumulator::new(*spec)?;
    let (Some(&w0), Some(&t0)) = (path.positions.first(), path.times.first()) else {
        return Ok(GirsanovWeight { value: 1.0, method: WeightMethod::PathIntegral });
    };
    if path.positions.len() != path.times.len() {
        return Err(Error::InvalidArgument("path times and positions differ in length"));
    }
    if w0 != spec.x0() || t0 != 0.0 {
        return Err(Error::InvalidArgument("path must start at (0, x0)"));
    }
    for k in 1..path.positions.len() {
        let dt = path.times[k] - path.times[k - 1];
        acc.advance(path.positions[k] - path.positions[k - 1], dt)?;
    }
    Ok(acc.weight())
}

/// Unnormalized density `Z(x, t) φ_t(x - x0)` defined on the whole line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TildeDensity {
    spec: ProcessSpec,
}

impl TildeDensity {
    pub fn new(spec: ProcessSpec) -> Result<Self> {
        needs_interior_start(&spec)?;
        Ok(TildeDensity { spec })
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    /// Signed value; negative beyond the boundary for the sinh-type weights.
    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidTime { t });
        }
        check_weight_time(&self.spec, t)?;
        if !x.is_finite() {
            return Ok(0.0);
        }
        let z = z_signed(&self.spec, x, t);
        let dx = x - self.spec.x0();
        let ln = z.ln - dx * dx / (2.0 * t) - 0.5 * libm::log(2.0 * PI * t);
        Ok(Signed { sign: z.sign, ln }.value())
    }
}

/// Shorthand for `TildeDensity::new(*spec)?.eval(x, t)`.
pub fn tilde_density(spec: &ProcessSpec, x: f64, t: f64) -> Result<f64> {
    TildeDensity::new(*spec)?.eval(x, t)
}

/// `p̃(x) + p̃(2b(t) - x)` inside the state space, 0 outside.
pub fn image_density(tilde: &TildeDensity, boundary: &BoundaryInfo, x: f64, t: f64) -> Result<f64> {
    if !(boundary.depth(x, t) >= 0.0) {
        return Ok(0.0);
    }
    Ok(tilde.eval(x, t)? + tilde.eval(boundary.reflect(x, t), t)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_weights() {
        let c = ProcessSpec::CothII { a: 1.0, mu: -1.0 };
        assert_eq!(z_closed(&c, 0.0, 0.0).unwrap().value, 1.0);
        let z = z_closed(&c, 0.5, 1.0).unwrap().value;
        assert!(libm::fabs(z - 0.26894142136999512) < 1e-15);
        let ab = ProcessSpec::LineAB { alpha: 0.5, beta: 1.0 };
        let z = z_closed(&ab, 0.0, 2.0).unwrap().value;
        assert!(libm::fabs(z - 1.3678794411714423) < 1e-14);
        assert!(z_closed(&c, 1.0, 1.0).is_err());
    }

    #[test]
    fn empty_path_has_unit_weight() {
        let c = ProcessSpec::CothII { a: 1.0, mu: -1.0 };
        let p = PathSample { times: alloc::vec![], positions: alloc::vec![], seed: 0, dt: 1e-3 };
        assert_eq!(z_path(&c, &p).unwrap().value, 1.0);
        let touching =
            PathSample { times: alloc::vec![0.0, 0.5, 1.0], positions: alloc::vec![0.0, 0.5, 1.0], seed: 0, dt: 0.5 };
        assert!(matches!(z_path(&c, &touching), Err(Error::PathExited { index: 2 })));
    }

    #[test]
    fn tilde_vanishes_on_boundary() {
        let c = ProcessSpec::CothII { a: 1.0, mu: -1.0 };
        assert_eq!(tilde_density(&c, 1.0, 1.0).unwrap(), 0.0);
        assert!(tilde_density(&c, 1.5, 1.0).unwrap() < 0.0);
        let t = TildeDensity::new(c).unwrap();
        assert_eq!(image_density(&t, &c.boundary(), 1.0, 1.0).unwrap(), 0.0);
    }
}
