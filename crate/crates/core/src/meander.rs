//! Survival probability of drifted Brownian motion started at `x > 0` to stay
//! positive for a time `s`, and its log-derivative.
//!
//! With `u = (x+μs)/√(2s)`, `v = (x-μs)/√(2s)`:
//!
//! ```text
//! D(x)  = 2π = erfc(-u) - e^{-2μx} erfc(v)
//! D'(x) = 2√(2/(πs)) e^{-u²} + 2μ e^{-2μx} erfc(v)
//! ```
//!
//! Every term carries a common factor `e^{-w}` (with `w = u²` when `u < 0`)
//! which is removed before evaluation, so neither `D` nor `D'/D` underflows.
//! Close to the origin `D` is obtained by integrating `D'`, avoiding the
//! cancellation between the two erfc terms.

use core::f64::consts::PI;

use crate::numerics::{erfc, erfcx, gauss_legendre_16};

/// `ln D` and `D'/D` at `x > 0`, `s > 0`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Survival {
    pub log_d: f64,
    pub dlog: f64,
}

struct Scaled {
    s: f64,
    mu: f64,
    root: f64,
    w: f64,
}

impl Scaled {
    fn new(x: f64, s: f64, mu: f64) -> Self {
        let root = libm::sqrt(2.0 * s);
        let u = (x + mu * s) / root;
        let w = if u < 0.0 { u * u } else { 0.0 };
        Scaled { s, mu, root, w }
    }

    // e^{w - 2μy} erfc(v(y))
    fn image(&self, y: f64) -> f64 {
        let u = (y + self.mu * self.s) / self.root;
        let v = (y - self.mu * self.s) / self.root;
        if v >= 0.0 {
            erfcx(v) * libm::exp(self.w - u * u)
        } else {
            libm::exp(self.w - 2.0 * self.mu * y) * erfc(v)
        }
    }

    fn deriv(&self, y: f64) -> f64 {
        let u = (y + self.mu * self.s) / self.root;
        2.0 * libm::sqrt(2.0 / (PI * self.s)) * libm::exp(self.w - u * u) + 2.0 * self.mu * self.image(y)
    }

    fn direct(&self, x: f64) -> f64 {
        let u = (x + self.mu * self.s) / self.root;
        let lead = if u < 0.0 { erfcx(-u) } else { erfc(-u) };
        lead - self.image(x)
    }
}

pub(crate) fn survival(x: f64, s: f64, mu: f64) -> Survival {
    let k = Scaled::new(x, s, mu);
    let z = x * (1.0 / k.root).max(libm::fabs(mu));
    let d = if z < 0.5 { gauss_legendre_16(|y| k.deriv(y), 0.0, x) } else { k.direct(x) };
    Survival { log_d: libm::log(d) - k.w, dlog: k.deriv(x) / d }
}

/// `π_m(x, s)` for `x ≥ 0`; `s = 0` gives 1 for `x > 0`.
pub(crate) fn pi(x: f64, s: f64, mu: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if s == 0.0 {
        return 1.0;
    }
    (0.5 * libm::exp(survival(x, s, mu).log_d)).min(1.0)
}

/// `ln(π(x,s)/x)`, continuous at `x = 0` where it equals `ln(D'(0)/2)`.
pub(crate) fn log_pi_over_x(x: f64, s: f64, mu: f64) -> f64 {
    if x == 0.0 {
        let k = Scaled::new(0.0, s, mu);
        return libm::log(0.5 * k.deriv(0.0)) - k.w;
    }
    survival(x, s, mu).log_d - core::f64::consts::LN_2 - libm::log(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn driftless_matches_erf() {
        // μ = 0: π = erf(x/√(2s))
        for &(x, s) in &[(0.01, 1.0), (0.5, 0.7), (3.0, 0.2)] {
            let want = crate::numerics::erf(x / libm::sqrt(2.0 * s));
            assert!(libm::fabs(pi(x, s, 0.0) / want - 1.0) < 1e-13, "x={x}");
        }
    }

    #[test]
    fn branches_agree_at_switch() {
        for &mu in &[-2.0, -0.3, 0.0, 1.0, 2.5] {
            let s = 0.8;
            let k = Scaled::new(0.0, s, mu);
            let z_switch = 0.5 / (1.0 / k.root).max(libm::fabs(mu));
            let x = z_switch * 1.0001;
            let a = Scaled::new(x, s, mu);
            let quad = gauss_legendre_16(|y| a.deriv(y), 0.0, x);
            assert!(libm::fabs(quad / a.direct(x) - 1.0) < 1e-13, "mu={mu}");
        }
    }

    #[test]
    fn origin_limit() {
        let s = 0.5;
        let mu = 0.7;
        let near = log_pi_over_x(1e-9, s, mu);
        assert!(libm::fabs(near - log_pi_over_x(0.0, s, mu)) < 1e-8);
    }
}
