//! Literal transcriptions of the published special-case formulas.
//!
//! These are deliberately written the way they are typeset (no log-space
//! rearrangement) so that the verification battery compares the general
//! implementation against the formulas as stated. Two of them are known
//! to disagree with the densities they summarize; see
//! [`excursion_variance_as_printed`] and [`line_ab_simplified_as_printed`].

use core::f64::consts::PI;

use crate::numerics::{erf, erfc};

/// Mass of the tilde density of the coth family below the barrier.
pub fn coth_tilde_mass_below_barrier(a: f64, mu: f64, t: f64) -> f64 {
    let root = libm::sqrt(2.0 * t);
    (libm::exp(a * mu) * (erf((a + mu * t) / root) + 1.0) + libm::exp(-a * mu) * (erfc((a - mu * t) / root) - 2.0))
        / (4.0 * libm::sinh(mu * a))
}

/// Outgoing current `-½ ∂ₓp̃` of the coth tilde density at the barrier.
pub fn coth_tilde_barrier_current(a: f64, mu: f64, t: f64) -> f64 {
    mu * libm::exp(-(a * a + mu * mu * t * t) / (2.0 * t)) / (2.0 * libm::sinh(mu * a) * libm::sqrt(2.0 * PI * t))
}

/// Simplified single-bracket form of the receding-line density as typeset.
///
/// Equals minus the image sum: the bracket is written in the wrong order.
pub fn line_ab_simplified_as_printed(x: f64, t: f64, alpha: f64, beta: f64) -> f64 {
    libm::sinh(alpha * (alpha * t + beta - x)) / libm::sinh(alpha * beta)
        * libm::exp(-alpha * alpha * t + alpha * (x - 2.0 * beta) - (4.0 * beta * beta + x * x) / (2.0 * t))
        / libm::sqrt(2.0 * PI * t)
        * (libm::exp(2.0 * beta * x / t) - libm::exp(2.0 * beta * (beta + alpha * t) / t))
}

/// Excursion density from the origin to `x_end > 0`.
pub fn excursion_from_origin(x: f64, t: f64, x_end: f64, horizon: f64) -> f64 {
    let s = horizon - t;
    libm::sqrt(2.0 * horizon * horizon * horizon / (PI * t * t * t * s))
        * libm::exp(-(t * t * x_end * x_end + horizon * horizon * x * x) / (2.0 * horizon * t * s))
        * x
        / x_end
        * libm::sinh(x * x_end / s)
}

/// Standard Brownian excursion density on `[0, horizon]`.
pub fn standard_excursion(x: f64, t: f64, horizon: f64) -> f64 {
    let s = horizon - t;
    libm::sqrt(2.0 * horizon * horizon * horizon / (PI * t * t * t * s * s * s))
        * x
        * x
        * libm::exp(-horizon * x * x / (2.0 * t * s))
}

fn excursion_parts(t: f64, x0: f64, x_end: f64, horizon: f64) -> (f64, f64, f64, f64) {
    let d = libm::sqrt(2.0 * t * horizon * (horizon - t));
    let a = t * (x_end - x0) + horizon * x0;
    let b = t * (x_end + x0) - horizon * x0;
    let sh = libm::sinh(x_end * x0 / horizon);
    (d, a, b, sh)
}

/// Excursion mean as typeset (needs `x0, x_end > 0`).
pub fn excursion_mean_as_printed(t: f64, x0: f64, x_end: f64, horizon: f64) -> f64 {
    let (d, a, b, sh) = excursion_parts(t, x0, x_end, horizon);
    let c = x_end * x0 / horizon;
    (libm::exp(c) * a * erf(a / d) - libm::exp(-c) * b * erf(b / d)) / (2.0 * horizon * sh)
}

/// Excursion variance as typeset.
///
/// The last term enters with the wrong sign, which makes the value negative
/// for ordinary parameters; [`excursion_variance_corrected`] flips it.
pub fn excursion_variance_as_printed(t: f64, x0: f64, x_end: f64, horizon: f64) -> f64 {
    excursion_variance_signed(t, x0, x_end, horizon, -1.0)
}

/// The typeset variance with the sign of its last term corrected.
pub fn excursion_variance_corrected(t: f64, x0: f64, x_end: f64, horizon: f64) -> f64 {
    excursion_variance_signed(t, x0, x_end, horizon, 1.0)
}

fn excursion_variance_signed(t: f64, x0: f64, x_end: f64, horizon: f64, last: f64) -> f64 {
    let (d, a, b, sh) = excursion_parts(t, x0, x_end, horizon);
    let c = x_end * x0 / horizon;
    let (ea, eb) = (erf(a / d), erf(b / d));
    let s = horizon - t;
    let w = horizon * x0 - t * (x_end + x0);
    (2.0 * a * b * ea * eb - libm::exp(2.0 * c) * a * a * ea * ea - libm::exp(-2.0 * c) * w * w * eb * eb
        + 4.0 * (t * (t * (x_end * x_end - horizon) + horizon * horizon) + s * s * x0 * x0) * sh * sh
        + last * 4.0 * t * s * x_end * x0 * libm::sinh(2.0 * c))
        / (4.0 * horizon * horizon * sh * sh)
}

/// Drifted meander density for a general start, as typeset.
pub fn meander(x: f64, t: f64, x0: f64, mu: f64, horizon: f64) -> f64 {
    let s = horizon - t;
    let rs = libm::sqrt(2.0 * s);
    let rt = libm::sqrt(2.0 * horizon);
    let num = libm::expm1(2.0 * x * x0 / t)
        * libm::exp(-(2.0 * x * (x0 + mu * t) + (x0 - mu * t) * (x0 - mu * t) + x * x) / (2.0 * t))
        * (erf((x - mu * s) / rs) + libm::exp(2.0 * mu * x) * (erf((x + mu * s) / rs) + 1.0) - 1.0);
    let den = libm::sqrt(2.0 * PI * t)
        * (libm::exp(2.0 * mu * x0) * (erf((x0 + mu * horizon) / rt) + 1.0) + erf((x0 - mu * horizon) / rt) - 1.0);
    num / den
}

/// Drifted meander density from the origin, as typeset.
pub fn meander_from_origin(x: f64, t: f64, mu: f64, horizon: f64) -> f64 {
    let s = horizon - t;
    let rs = libm::sqrt(2.0 * s);
    libm::sqrt(horizon)
        * x
        * libm::exp(0.5 * (mu * mu * s - x * x / t - 2.0 * mu * x))
        * (erf((x - mu * s) / rs) + libm::exp(2.0 * mu * x) * (erf((x + mu * s) / rs) + 1.0) - 1.0)
        / (t * libm::sqrt(t)
            * (mu
                * libm::sqrt(2.0 * PI * horizon)
                * libm::exp(0.5 * mu * mu * horizon)
                * (erf(mu * libm::sqrt(0.5 * horizon)) + 1.0)
                + 2.0))
}

/// Driftless meander density, general start.
pub fn driftless_meander(x: f64, t: f64, x0: f64, horizon: f64) -> f64 {
    libm::exp(-(x + x0) * (x + x0) / (2.0 * t))
        * libm::expm1(2.0 * x * x0 / t)
        * erf(x / libm::sqrt(2.0 * (horizon - t)))
        / (libm::sqrt(2.0 * PI * t) * erf(x0 / libm::sqrt(2.0 * horizon)))
}

/// Driftless meander density from the origin.
pub fn driftless_meander_from_origin(x: f64, t: f64, horizon: f64) -> f64 {
    libm::sqrt(horizon) * x * libm::exp(-x * x / (2.0 * t)) * erf(x / libm::sqrt(2.0 * (horizon - t)))
        / (t * libm::sqrt(t))
}

/// Final-time law of the driftless meander from the origin (Rayleigh).
pub fn rayleigh(x: f64, horizon: f64) -> f64 {
    x * libm::exp(-x * x / (2.0 * horizon)) / horizon
}
