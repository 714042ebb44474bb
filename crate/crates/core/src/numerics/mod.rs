//! Scalar kernels and quadrature shared by the rest of the crate.
//!
//! Everything here is a pure function of its arguments and is safe to call
//! from any number of threads.

mod quadrature;
mod special;

pub use quadrature::{gauss_legendre_16, integrate, Interval, QuadratureError, QuadratureResult, MAX_SUBDIVISIONS};
pub use special::{erf, erfc, erfcx, exp_neg_sq, gauss_pair_diff, ln_sinhc, log1mexp, log_sinh, sinhc, xcoth};
