use core::f64::consts::PI;

use super::cdf::integrate_density;
use crate::error::{Error, Result};
use crate::numerics::{erf, erfc, xcoth};
use crate::process::ProcessSpec;

/// Mean and variance of `X(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentPair {
    pub mean: f64,
    pub variance: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MomentProvenance {
    ClosedForm,
    /// Obtained by quadrature of the density; no closed form is claimed.
    Numeric,
}

fn check_moment_time(spec: &ProcessSpec, t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidTime { t });
    }
    if let Some(horizon) = spec.horizon() {
        if t > horizon {
            return Err(Error::Horizon { t, horizon });
        }
    }
    Ok(())
}

fn taboo(a: f64, t: f64) -> (f64, f64) {
    let r = libm::sqrt(2.0 * t / PI);
    let g = libm::exp(-a * a / (2.0 * t));
    let ef = erf(a / libm::sqrt(2.0 * t));
    let mean = a - r * g - (a * a + t) * ef / a;
    let var = a * a + (3.0 - 2.0 / PI * libm::exp(-a * a / t)) * t
        - (1.0 + t / (a * a)) * ef * (2.0 * a * r * g + (a * a + t) * ef);
    (mean, var)
}

fn coth_ii(a: f64, mu: f64, t: f64) -> (f64, f64) {
    let root = libm::sqrt(2.0 * t);
    let u = (a + mu * t) / root;
    let v = (a - mu * t) / root;
    let e2 = libm::exp(2.0 * a * mu);
    let bracket = e2 * (a - (a + mu * t) * erf(u)) + (a - mu * t) * erf(v) - a;
    // e^{-aμ}·bracket / (2 sinh aμ)
    let mean = bracket / (e2 - 1.0);
    let coth_m1 = 2.0 / (e2 - 1.0);
    let var = -bracket * bracket / ((e2 - 1.0) * (e2 - 1.0))
        + 0.5
            * coth_m1
            * (2.0 * a * e2 * (a + mu * t) * erfc(u) - 2.0 * a * (a - mu * t) * erfc(v)
                + t * (e2 - 1.0) * (mu * mu * t + 1.0));
    (mean, var)
}

fn line_ab(alpha: f64, beta: f64, t: f64) -> (f64, f64) {
    let root = libm::sqrt(2.0 * t);
    let e2 = libm::exp(2.0 * alpha * beta);
    // e^{-αβ}/(2 sinh αβ) = 1/(e^{2αβ} - 1)
    let pre = 1.0 / (e2 - 1.0);
    let ec1 = erfc((alpha * t - beta) / root);
    let ec2 = erfc((alpha * t + beta) / root);
    let br = -2.0 * beta + (beta - alpha * t) * ec1 + e2 * (beta + alpha * t) * ec2;
    let mean = pre * br;
    let var = -pre * pre * br * br
        + pre
            * (-4.0 * beta * beta
                + 2.0 * (beta * beta - alpha * alpha * t * t) * ec1
                + e2 * (2.0 * (beta + alpha * t) * (beta + alpha * t) * ec2 + t)
                - t);
    (mean, var)
}

fn line_ab_star(alpha: f64, beta: f64, t: f64) -> (f64, f64) {
    let (m, v) = taboo(beta, t);
    // taboo law below β, carried along by the line
    (m + alpha * t, v)
}

// folded-normal pieces of the excursion law
fn fold_mean(m: f64, v: f64) -> f64 {
    m * erf(m / libm::sqrt(2.0 * v)) + libm::sqrt(2.0 * v / PI) * libm::exp(-m * m / (2.0 * v))
}

fn fold_slope(u: f64, v: f64) -> f64 {
    if u == 0.0 {
        1.0 / libm::sqrt(2.0 * PI * v)
    } else {
        let r = libm::sqrt(u);
        erf(r / libm::sqrt(2.0 * v)) / (2.0 * r)
    }
}

/// Excursion moments from its decomposition into two folded normals.
fn excursion(x0: f64, x_end: f64, horizon: f64, t: f64) -> (f64, f64) {
    if t == 0.0 {
        return (x0, 0.0);
    }
    if t == horizon {
        return (x_end, 0.0);
    }
    let s = horizon - t;
    let v = t * s / horizon;
    let m1 = (x0 * s + x_end * t) / horizon;
    let m2 = (x0 * s - x_end * t) / horizon;
    let c = x0 * x_end / horizon;
    let (u1, u2) = (m1 * m1, m2 * m2);
    let du = u1 - u2;
    // divided difference of G(u) = g(√u) over [u2, u1]
    let dd = if du <= 1e-6 * u1.max(v) {
        fold_slope(0.5 * (u1 + u2), v)
    } else {
        (fold_mean(m1, v) - fold_mean(m2, v)) / du
    };
    let h = if c == 0.0 { 1.0 } else { 2.0 * c / libm::expm1(2.0 * c) };
    let mean = fold_mean(m1, v) + dd * (2.0 * s * t / horizon) * h;
    let second =
        v + (t * t * x_end * x_end + x0 * x0 * s * s) / (horizon * horizon) + (2.0 * s * t / horizon) * xcoth(c);
    (mean, (second - mean * mean).max(0.0))
}

/// Closed-form moments; [`Error::UnsupportedMoment`] for the meander.
pub fn closed_moments(spec: &ProcessSpec, t: f64) -> Result<MomentPair> {
    check_moment_time(spec, t)?;
    if let ProcessSpec::MeanderM { .. } = spec {
        return Err(Error::UnsupportedMoment { family: spec.family() });
    }
    if t == 0.0 {
        return Ok(MomentPair { mean: spec.x0(), variance: 0.0, t });
    }
    let (mean, variance) = match *spec {
        ProcessSpec::TabooI { a } => taboo(a, t),
        ProcessSpec::CothII { a, mu } => coth_ii(a, mu, t),
        ProcessSpec::LineAB { alpha, beta } => line_ab(alpha, beta, t),
        ProcessSpec::LineABStar { alpha, beta } => line_ab_star(alpha, beta, t),
        ProcessSpec::ExcursionE { x0, x_end, horizon } => excursion(x0, x_end, horizon, t),
        ProcessSpec::MeanderM { .. } => unreachable!(),
    };
    Ok(MomentPair { mean, variance, t })
}

/// Closed-form `E[X(t)]`; the meander has none (see [`numeric_moments`]).
pub fn mean(spec: &ProcessSpec, t: f64) -> Result<f64> {
    Ok(closed_moments(spec, t)?.mean)
}

/// Closed-form `Var[X(t)]`.
pub fn variance(spec: &ProcessSpec, t: f64) -> Result<f64> {
    Ok(closed_moments(spec, t)?.variance)
}

/// Moments by quadrature of the density.
pub fn numeric_moments(spec: &ProcessSpec, t: f64) -> Result<MomentPair> {
    check_moment_time(spec, t)?;
    let degenerate_end = match *spec {
        ProcessSpec::ExcursionE { horizon, x_end, .. } if t == horizon => Some(x_end),
        _ => None,
    };
    if t == 0.0 || degenerate_end.is_some() {
        let mean = degenerate_end.unwrap_or(spec.x0());
        return Ok(MomentPair { mean, variance: 0.0, t });
    }
    let lo = f64::NEG_INFINITY;
    let hi = f64::INFINITY;
    let mass = integrate_density(spec, t, lo, hi, |_| 1.0)?.value;
    let m = integrate_density(spec, t, lo, hi, |x| x)?.value / mass;
    let var = integrate_density(spec, t, lo, hi, |x| (x - m) * (x - m))?.value / mass;
    Ok(MomentPair { mean: m, variance: var, t })
}

/// Closed form when one exists, quadrature otherwise; the provenance says which.
pub fn moments(spec: &ProcessSpec, t: f64) -> Result<(MomentPair, MomentProvenance)> {
    match closed_moments(spec, t) {
        Ok(p) => Ok((p, MomentProvenance::ClosedForm)),
        Err(Error::UnsupportedMoment { .. }) => Ok((numeric_moments(spec, t)?, MomentProvenance::Numeric)),
        Err(e) => Err(e),
    }
}

/// Leading large-time behaviour of the mean and variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticLaw {
    spec: ProcessSpec,
    pub regime: &'static str,
}

impl AsymptoticLaw {
    /// Deterministic part removed before comparing means (`αt` for the
    /// shrinking line with the taboo-like fluctuation).
    pub fn centering(&self, t: f64) -> f64 {
        match self.spec {
            ProcessSpec::LineABStar { alpha, .. } => alpha * t,
            _ => 0.0,
        }
    }

    /// Leading term of `E[X(t)] - centering(t)`.
    pub fn mean_leading(&self, t: f64) -> f64 {
        match self.spec {
            ProcessSpec::TabooI { .. } | ProcessSpec::LineABStar { .. } => -2.0 * libm::sqrt(2.0 * t / PI),
            ProcessSpec::CothII { mu, .. } => -libm::fabs(mu) * t,
            ProcessSpec::LineAB { alpha, beta } if alpha > 0.0 => beta - xcoth(alpha * beta) / alpha,
            ProcessSpec::LineAB { alpha, .. } => 2.0 * alpha * t,
            _ => f64::NAN,
        }
    }

    /// Full leading mean, `centering(t) + mean_leading(t)`.
    pub fn mean(&self, t: f64) -> f64 {
        self.centering(t) + self.mean_leading(t)
    }

    pub fn var_leading(&self, t: f64) -> f64 {
        match self.spec {
            ProcessSpec::TabooI { .. } | ProcessSpec::LineABStar { .. } => (3.0 - 8.0 / PI) * t,
            _ => t,
        }
    }
}

/// Large-time law for the four infinite-horizon families.
pub fn asymptotics(spec: &ProcessSpec) -> Result<AsymptoticLaw> {
    let regime = match *spec {
        ProcessSpec::TabooI { .. } => "taboo: mean ~ -2 sqrt(2t/pi), var ~ (3 - 8/pi) t",
        ProcessSpec::CothII { .. } => "free motion with drift -|mu|: mean ~ -|mu| t, var ~ t",
        ProcessSpec::LineAB { alpha, .. } if alpha > 0.0 => {
            "receding line: mean -> beta - beta coth(alpha beta), var ~ t"
        }
        ProcessSpec::LineAB { .. } => "approaching line: mean ~ 2 alpha t, var ~ t",
        ProcessSpec::LineABStar { .. } => "taboo below a line: mean - alpha t ~ -2 sqrt(2t/pi), var ~ (3 - 8/pi) t",
        _ => {
            return Err(Error::Unsupported {
                family: spec.family(),
                operation: "large-time asymptotics (finite horizon)",
            })
        }
    };
    Ok(AsymptoticLaw { spec: *spec, regime })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        libm::fabs(a - b) / libm::fabs(b)
    }

    // 40-digit oracle values
    #[test]
    fn oracle_moments() {
        let cases = [
            (ProcessSpec::CothII { a: 1.0, mu: -1.0 }, 1.0, -1.207791569607523, 0.7517269561686125),
            (ProcessSpec::TabooI { a: 1.0 }, 0.1, -0.09997813083670127, 0.09004811168099692),
            (ProcessSpec::TabooI { a: 1.0 }, 1.0, -0.8493204333124585, 0.5800139349330208),
            (ProcessSpec::TabooI { a: 1.0 }, 10.0, -4.12995192235593, 4.6835932743167),
            (ProcessSpec::LineAB { alpha: 0.5, beta: 1.0 }, 1.0, -0.4444760588272504, 0.6329662703862961),
            (ProcessSpec::LineAB { alpha: -0.5, beta: 1.0 }, 2.0, -2.66626605061352, 1.2189321748230879),
            (ProcessSpec::LineABStar { alpha: -0.5, beta: 1.0 }, 2.0, -2.4402822123745844, 1.0450227239682037),
            (
                ProcessSpec::ExcursionE { x0: 0.3, x_end: 0.7, horizon: 1.0 },
                0.5,
                0.8762041555772206,
                0.1345947591085429,
            ),
        ];
        for (spec, t, m, v) in cases {
            let p = closed_moments(&spec, t).unwrap();
            assert!(rel(p.mean, m) < 1e-12, "{spec:?} mean {} vs {m}", p.mean);
            assert!(rel(p.variance, v) < 1e-11, "{spec:?} var {} vs {v}", p.variance);
        }
    }

    #[test]
    fn excursion_pinned_ends() {
        let e = ProcessSpec::ExcursionE { x0: 0.3, x_end: 0.7, horizon: 1.0 };
        assert_eq!(variance(&e, 0.0).unwrap(), 0.0);
        assert_eq!(variance(&e, 1.0).unwrap(), 0.0);
        assert_eq!(mean(&e, 1.0).unwrap(), 0.7);
        let std = ProcessSpec::ExcursionE { x0: 0.0, x_end: 0.0, horizon: 1.0 };
        let v: f64 = 0.25;
        assert!(rel(mean(&std, 0.5).unwrap(), 2.0 * libm::sqrt(2.0 * v / PI)) < 1e-14);
        assert!(rel(variance(&std, 0.5).unwrap(), (3.0 - 8.0 / PI) * v) < 1e-13);
    }

    #[test]
    fn meander_is_numeric() {
        let m = ProcessSpec::MeanderM { mu: 1.0, x0: 0.0, horizon: 1.0 };
        assert!(matches!(mean(&m, 0.5), Err(Error::UnsupportedMoment { .. })));
        let (_, prov) = moments(&m, 0.5).unwrap();
        assert_eq!(prov, MomentProvenance::Numeric);
    }
}
