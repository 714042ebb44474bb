use core::fmt;

use crate::numerics::QuadratureError;
use crate::process::Family;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure modes shared by every operation of the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A process parameter violates its family invariant.
    InvalidParameter {
        family: Family,
        reason: &'static str,
    },
    /// `x` lies on the entrance boundary or outside the state space at time `t`.
    OutsideStateSpace {
        x: f64,
        t: f64,
    },
    /// Finite-horizon families (excursion, meander) evaluated at or past `T`.
    Horizon {
        t: f64,
        horizon: f64,
    },
    /// Time argument is not admissible (negative, zero where positivity is required, NaN).
    InvalidTime {
        t: f64,
    },
    /// The operation has no meaning for this family.
    Unsupported {
        family: Family,
        operation: &'static str,
    },
    /// No closed-form moment is available; use the quadrature route instead.
    UnsupportedMoment {
        family: Family,
    },
    /// A driftless path left the state space; its Girsanov weight is zero.
    PathExited {
        index: usize,
    },
    /// The conditioning probability vanishes, so its log-derivative is undefined.
    DegenerateConditioning,
    Quadrature(QuadratureError),
    InvalidArgument(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { family, reason } => {
                write!(f, "invalid parameters for {family}: {reason}")
            }
            Error::OutsideStateSpace { x, t } => {
                write!(f, "x = {x} is not strictly inside the state space at t = {t}")
            }
            Error::Horizon { t, horizon } => {
                write!(f, "t = {t} is not below the horizon T = {horizon}")
            }
            Error::InvalidTime { t } => write!(f, "invalid time t = {t}"),
            Error::Unsupported { family, operation } => {
                write!(f, "{operation} is not defined for {family}")
            }
            Error::UnsupportedMoment { family } => {
                write!(f, "no closed-form moments for {family}; use the numeric (quadrature) moments")
            }
            Error::PathExited { index } => {
                write!(f, "path left the state space at sample {index} (zero weight)")
            }
            Error::DegenerateConditioning => f.write_str("conditioning probability vanishes at the evaluation point"),
            Error::Quadrature(e) => write!(f, "{e}"),
            Error::InvalidArgument(msg) => f.write_str(msg),
        }
    }
}

impl core::error::Error for Error {}

impl From<QuadratureError> for Error {
    fn from(e: QuadratureError) -> Self {
        Error::Quadrature(e)
    }
}
