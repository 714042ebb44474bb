//! The six families of conditioned diffusions with unit diffusion coefficient.

use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meander;
use crate::numerics::{log1mexp, xcoth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Family {
    #[cfg_attr(feature = "serde", serde(rename = "taboo_i"))]
    TabooI,
    #[cfg_attr(feature = "serde", serde(rename = "coth_ii"))]
    CothII,
    #[cfg_attr(feature = "serde", serde(rename = "line_ab"))]
    LineAB,
    #[cfg_attr(feature = "serde", serde(rename = "line_ab_star"))]
    LineABStar,
    #[cfg_attr(feature = "serde", serde(rename = "excursion_e"))]
    ExcursionE,
    #[cfg_attr(feature = "serde", serde(rename = "meander_m"))]
    MeanderM,
}

impl Family {
    pub const ALL: [Family; 6] =
        [Family::TabooI, Family::CothII, Family::LineAB, Family::LineABStar, Family::ExcursionE, Family::MeanderM];

    /// Wire name used in JSON specs and report rows.
    pub fn label(self) -> &'static str {
        match self {
            Family::TabooI => "taboo_i",
            Family::CothII => "coth_ii",
            Family::LineAB => "line_ab",
            Family::LineABStar => "line_ab_star",
            Family::ExcursionE => "excursion_e",
            Family::MeanderM => "meander_m",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One process: family tag plus parameters.
///
/// Families I to IV start at the origin. The excursion and the meander start
/// at `x0 ≥ 0` and live on `[0, horizon]`; the excursion ends at `x_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", deny_unknown_fields))]
pub enum ProcessSpec {
    #[cfg_attr(feature = "serde", serde(rename = "taboo_i"))]
    TabooI { a: f64 },
    #[cfg_attr(feature = "serde", serde(rename = "coth_ii"))]
    CothII { a: f64, mu: f64 },
    #[cfg_attr(feature = "serde", serde(rename = "line_ab"))]
    LineAB { alpha: f64, beta: f64 },
    #[cfg_attr(feature = "serde", serde(rename = "line_ab_star"))]
    LineABStar { alpha: f64, beta: f64 },
    #[cfg_attr(feature = "serde", serde(rename = "excursion_e"))]
    ExcursionE {
        #[cfg_attr(feature = "serde", serde(default))]
        x0: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        x_end: f64,
        horizon: f64,
    },
    #[cfg_attr(feature = "serde", serde(rename = "meander_m"))]
    MeanderM {
        mu: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        x0: f64,
        horizon: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum BoundarySide {
    /// State space lies below the boundary.
    UpperBarrier,
    /// State space lies above the boundary.
    LowerBarrier,
}

/// Entrance boundary `base + slope·t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryInfo {
    pub side: BoundarySide,
    pub base: f64,
    pub slope: f64,
}

impl BoundaryInfo {
    pub fn position_at(&self, t: f64) -> f64 {
        self.base + self.slope * t
    }

    /// Signed distance into the state space; positive inside.
    pub fn depth(&self, x: f64, t: f64) -> f64 {
        match self.side {
            BoundarySide::UpperBarrier => self.position_at(t) - x,
            BoundarySide::LowerBarrier => x - self.position_at(t),
        }
    }

    /// Mirror image of `x` through the boundary at time `t`.
    pub fn reflect(&self, x: f64, t: f64) -> f64 {
        2.0 * self.position_at(t) - x
    }
}

fn invalid(family: Family, reason: &'static str) -> Error {
    Error::InvalidParameter { family, reason }
}

impl ProcessSpec {
    pub fn family(&self) -> Family {
        match self {
            ProcessSpec::TabooI { .. } => Family::TabooI,
            ProcessSpec::CothII { .. } => Family::CothII,
            ProcessSpec::LineAB { .. } => Family::LineAB,
            ProcessSpec::LineABStar { .. } => Family::LineABStar,
            ProcessSpec::ExcursionE { .. } => Family::ExcursionE,
            ProcessSpec::MeanderM { .. } => Family::MeanderM,
        }
    }

    /// Returns the spec unchanged when every family invariant holds.
    pub fn validate(self) -> Result<Self> {
        let fam = self.family();
        let finite = |v: f64, what: &'static str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(fam, what))
            }
        };
        match self {
            ProcessSpec::TabooI { a } => {
                finite(a, "a must be finite")?;
                if !(a > 0.0) {
                    return Err(invalid(fam, "a must be > 0"));
                }
            }
            ProcessSpec::CothII { a, mu } => {
                finite(a, "a must be finite")?;
                finite(mu, "mu must be finite")?;
                if !(a > 0.0) {
                    return Err(invalid(fam, "a must be > 0"));
                }
                if mu == 0.0 {
                    return Err(invalid(fam, "mu must be nonzero (mu = 0 is taboo_i)"));
                }
            }
            ProcessSpec::LineAB { alpha, beta } => {
                finite(alpha, "alpha must be finite")?;
                finite(beta, "beta must be finite")?;
                if !(beta > 0.0) {
                    return Err(invalid(fam, "beta must be > 0"));
                }
                if alpha == 0.0 {
                    return Err(invalid(fam, "alpha must be nonzero"));
                }
            }
            ProcessSpec::LineABStar { alpha, beta } => {
                finite(alpha, "alpha must be finite")?;
                finite(beta, "beta must be finite")?;
                if !(beta > 0.0) {
                    return Err(invalid(fam, "beta must be > 0"));
                }
                if !(alpha < 0.0) {
                    return Err(invalid(fam, "alpha must be < 0"));
                }
            }
            ProcessSpec::ExcursionE { x0, x_end, horizon } => {
                finite(x0, "x0 must be finite")?;
                finite(x_end, "x_end must be finite")?;
                finite(horizon, "horizon must be finite")?;
                if !(horizon > 0.0) {
                    return Err(invalid(fam, "horizon must be > 0"));
                }
                if !(x0 >= 0.0) {
                    return Err(invalid(fam, "x0 must be >= 0"));
                }
                if !(x_end >= 0.0) {
                    return Err(invalid(fam, "x_end must be >= 0"));
                }
            }
            ProcessSpec::MeanderM { mu, x0, horizon } => {
                finite(mu, "mu must be finite")?;
                finite(x0, "x0 must be finite")?;
                finite(horizon, "horizon must be finite")?;
                if !(horizon > 0.0) {
                    return Err(invalid(fam, "horizon must be > 0"));
                }
                if !(x0 >= 0.0) {
                    return Err(invalid(fam, "x0 must be >= 0"));
                }
            }
        }
        Ok(self)
    }

    pub fn boundary(&self) -> BoundaryInfo {
        use BoundarySide::*;
        match *self {
            ProcessSpec::TabooI { a } | ProcessSpec::CothII { a, .. } => {
                BoundaryInfo { side: UpperBarrier, base: a, slope: 0.0 }
            }
            ProcessSpec::LineAB { alpha, beta } | ProcessSpec::LineABStar { alpha, beta } => {
                BoundaryInfo { side: UpperBarrier, base: beta, slope: alpha }
            }
            ProcessSpec::ExcursionE { .. } | ProcessSpec::MeanderM { .. } => {
                BoundaryInfo { side: LowerBarrier, base: 0.0, slope: 0.0 }
            }
        }
    }

    /// Starting point `X(0)`.
    pub fn x0(&self) -> f64 {
        match *self {
            ProcessSpec::ExcursionE { x0, .. } | ProcessSpec::MeanderM { x0, .. } => x0,
            _ => 0.0,
        }
    }

    /// Finite horizon `T` of the excursion and the meander.
    pub fn horizon(&self) -> Option<f64> {
        match *self {
            ProcessSpec::ExcursionE { horizon, .. } | ProcessSpec::MeanderM { horizon, .. } => Some(horizon),
            _ => None,
        }
    }

    /// Strictly inside the state space at time `t`.
    pub fn contains(&self, x: f64, t: f64) -> bool {
        x.is_finite() && self.boundary().depth(x, t) > 0.0
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidTime { t });
        }
        if let Some(horizon) = self.horizon() {
            if t >= horizon {
                return Err(Error::Horizon { t, horizon });
            }
        }
        Ok(())
    }

    fn check_point(&self, x: f64, t: f64) -> Result<()> {
        self.check_time(t)?;
        if !self.contains(x, t) {
            return Err(Error::OutsideStateSpace { x, t });
        }
        Ok(())
    }

    /// Drift `μ(x, t)` at an interior point.
    pub fn drift(&self, x: f64, t: f64) -> Result<f64> {
        self.check_point(x, t)?;
        Ok(self.drift_unchecked(x, t))
    }

    pub(crate) fn drift_unchecked(&self, x: f64, t: f64) -> f64 {
        let d = self.boundary().depth(x, t);
        match *self {
            ProcessSpec::TabooI { .. } => -1.0 / d,
            ProcessSpec::CothII { mu, .. } => -xcoth(mu * d) / d,
            ProcessSpec::LineAB { alpha, .. } => alpha - xcoth(alpha * d) / d,
            ProcessSpec::LineABStar { alpha, .. } => alpha - 1.0 / d,
            ProcessSpec::ExcursionE { x_end, horizon, .. } => {
                let s = horizon - t;
                xcoth(x_end * x / s) / x - x / s
            }
            ProcessSpec::MeanderM { mu, horizon, .. } => mu + meander::survival(x, horizon - t, mu).dlog,
        }
    }

    /// Conditioning probability `π(x, t)` whose log-derivative builds the drift.
    ///
    /// Defined for `line_ab` with `alpha > 0`, the excursion and the meander.
    /// On the boundary itself the value is 0.
    pub fn survival_pi(&self, x: f64, t: f64) -> Result<f64> {
        self.support_pi()?;
        self.check_time_closed(t)?;
        let d = self.boundary().depth(x, t);
        if !(d >= 0.0) {
            return Err(Error::OutsideStateSpace { x, t });
        }
        Ok(match *self {
            ProcessSpec::LineAB { alpha, .. } => -libm::expm1(-2.0 * alpha * d),
            ProcessSpec::ExcursionE { x_end, horizon, .. } => -libm::expm1(-2.0 * x * x_end / (horizon - t)),
            ProcessSpec::MeanderM { mu, horizon, .. } => meander::pi(x, horizon - t, mu),
            _ => unreachable!(),
        })
    }

    // meander π is defined at t = T (value 1); others need t < T
    fn check_time_closed(&self, t: f64) -> Result<()> {
        match *self {
            ProcessSpec::MeanderM { horizon, .. } if t == horizon => Ok(()),
            _ => self.check_time(t),
        }
    }

    fn support_pi(&self) -> Result<()> {
        let fam = self.family();
        match *self {
            ProcessSpec::LineAB { alpha, .. } if alpha > 0.0 => Ok(()),
            ProcessSpec::LineAB { .. } => Err(Error::Unsupported {
                family: fam,
                operation: "survival_pi with alpha < 0 (the probability is identically 0)",
            }),
            ProcessSpec::ExcursionE { .. } | ProcessSpec::MeanderM { .. } => Ok(()),
            _ => Err(Error::Unsupported { family: fam, operation: "survival_pi" }),
        }
    }

    fn log_survival_pi(&self, x: f64, t: f64) -> Result<f64> {
        self.check_point(x, t)?;
        let v = match *self {
            ProcessSpec::LineAB { alpha, .. } => log1mexp(2.0 * alpha * self.boundary().depth(x, t)),
            ProcessSpec::ExcursionE { x_end, horizon, .. } => log1mexp(2.0 * x * x_end / (horizon - t)),
            ProcessSpec::MeanderM { mu, horizon, .. } => {
                meander::survival(x, horizon - t, mu).log_d - core::f64::consts::LN_2
            }
            _ => unreachable!(),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::DegenerateConditioning)
        }
    }

    fn base_drift(&self, x: f64, t: f64) -> f64 {
        match *self {
            ProcessSpec::ExcursionE { x_end, horizon, .. } => (x_end - x) / (horizon - t),
            ProcessSpec::MeanderM { mu, .. } => mu,
            _ => 0.0,
        }
    }

    /// Doob drift rebuilt from `π` by a central difference of `ln π` with step `h`.
    pub fn doob_drift_check(&self, x: f64, t: f64, h: f64) -> Result<f64> {
        self.support_pi()?;
        if !(h > 0.0) {
            return Err(Error::InvalidArgument("finite-difference step must be > 0"));
        }
        self.check_point(x, t)?;
        let up = self.log_survival_pi(x + h, t)?;
        let down = self.log_survival_pi(x - h, t)?;
        Ok(self.base_drift(x, t) + (up - down) / (2.0 * h))
    }

    /// Excursion drift obtained by conditioning a Brownian motion with drift
    /// `mu` instead of a driftless one; the result does not depend on `mu`.
    pub fn excursion_drift_with_base(&self, x: f64, t: f64, mu: f64) -> Result<f64> {
        let ProcessSpec::ExcursionE { x_end, horizon, .. } = *self else {
            return Err(Error::Unsupported { family: self.family(), operation: "excursion_drift_with_base" });
        };
        self.check_point(x, t)?;
        let s = horizon - t;
        // ratio of the image term to the direct term: e^{-2xX/s}, free of mu
        let r = libm::exp(-2.0 * x * x_end / s);
        let one_minus_r = -libm::expm1(-2.0 * x * x_end / s);
        if one_minus_r == 0.0 {
            return Err(Error::DegenerateConditioning);
        }
        let direct = (x_end - x - mu * s) / s;
        let image = 2.0 * mu + (x_end + x - mu * s) / s;
        Ok(mu + (direct + image * r) / one_minus_r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_examples() {
        let taboo = ProcessSpec::TabooI { a: 1.0 };
        assert_eq!(taboo.drift(0.0, 3.0).unwrap(), -1.0);
        let coth = ProcessSpec::CothII { a: 1.0, mu: -1.0 };
        assert!(libm::fabs(coth.drift(0.0, 1.0).unwrap() + 1.3130352854993313) < 1e-15);
        let exc = ProcessSpec::ExcursionE { x0: 0.0, x_end: 0.0, horizon: 1.0 };
        assert!(libm::fabs(exc.drift(0.5, 0.5).unwrap() - 1.0) < 1e-15);
        assert!(matches!(exc.drift(0.5, 1.0), Err(Error::Horizon { .. })));
        assert!(matches!(taboo.drift(1.0, 0.0), Err(Error::OutsideStateSpace { .. })));
    }

    #[test]
    fn meander_origin_behaviour() {
        let m = ProcessSpec::MeanderM { mu: 0.0, x0: 0.0, horizon: 1.0 };
        let x = 1e-7;
        assert!(libm::fabs(m.drift(x, 0.2).unwrap() * x - 1.0) < 1e-6);
    }

    #[test]
    fn survival_examples() {
        let ab = ProcessSpec::LineAB { alpha: 0.5, beta: 1.0 };
        assert!(libm::fabs(ab.survival_pi(0.0, 0.0).unwrap() - 0.6321205588285577) < 1e-15);
        assert_eq!(ab.survival_pi(1.5, 1.0).unwrap(), 0.0);
        let m = ProcessSpec::MeanderM { mu: 0.0, x0: 0.0, horizon: 1.0 };
        assert_eq!(m.survival_pi(0.0, 0.5).unwrap(), 0.0);
        assert!(ProcessSpec::TabooI { a: 1.0 }.survival_pi(0.0, 1.0).is_err());
        let neg = ProcessSpec::LineAB { alpha: -0.5, beta: 1.0 };
        assert!(matches!(neg.survival_pi(0.0, 1.0), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn doob_examples() {
        let cases = [
            (ProcessSpec::LineAB { alpha: 0.5, beta: 1.0 }, 0.0, 1.0, 1e-8),
            (ProcessSpec::ExcursionE { x0: 0.1, x_end: 0.3, horizon: 1.0 }, 0.2, 0.4, 1e-7),
            (ProcessSpec::MeanderM { mu: 1.0, x0: 0.0, horizon: 1.0 }, 0.5, 0.3, 1e-7),
        ];
        for (spec, x, t, tol) in cases {
            let fd = spec.doob_drift_check(x, t, 1e-5).unwrap();
            let exact = spec.drift(x, t).unwrap();
            assert!(libm::fabs(fd - exact) < tol, "{spec:?}: {fd} vs {exact}");
        }
    }

    #[test]
    fn validation() {
        assert!(ProcessSpec::TabooI { a: 1.0 }.validate().is_ok());
        assert!(ProcessSpec::LineABStar { alpha: 0.5, beta: 1.0 }.validate().is_err());
        assert!(ProcessSpec::ExcursionE { x0: 0.0, x_end: 0.0, horizon: 1.0 }.validate().is_ok());
        assert!(ProcessSpec::CothII { a: 1.0, mu: 0.0 }.validate().is_err());
        assert!(ProcessSpec::TabooI { a: f64::NAN }.validate().is_err());
    }

    #[test]
    fn excursion_base_drift_invariance() {
        let e = ProcessSpec::ExcursionE { x0: 0.1, x_end: 0.8, horizon: 1.0 };
        for &(x, t) in &[(0.2, 0.1), (1.3, 0.7), (0.05, 0.95)] {
            let d = e.drift(x, t).unwrap();
            for &mu in &[-2.0, 0.0, 3.0] {
                let alt = e.excursion_drift_with_base(x, t, mu).unwrap();
                assert!(libm::fabs(alt - d) < 1e-10, "x={x} t={t} mu={mu}");
            }
        }
    }
}
