//! Error functions and the log-space helpers that keep singular factors finite.
//!
//! The error function is built from three pieces so that the result does not
//! depend on the platform libm:
//!
//! * `|x| < 0.5`: the all-positive series `erf x = 2x/√π e^{-x²} Σ (2x²)ⁿ/(2n+1)!!`.
//! * `0.5 ≤ x < 4`: Taylor expansion of `erfc` about the nearest anchor on a
//!   0.25 grid, with Hermite-polynomial coefficients generated by recurrence.
//! * `x ≥ 4`: Laplace continued fraction for `erfcx`, evaluated backward.
//!
//! Max relative error of `erfc` measured against a 50-digit oracle on
//! `[-6, 27]`: below 2e-15.

use core::f64::consts::{FRAC_2_SQRT_PI, LN_2};

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// `erfc(0.5 + 0.25 k)` for `k = 0..=14`, correctly rounded.
const ANCHORS: [f64; 15] = [
    0.4795001221869535,
    0.28884436634648486,
    0.15729920705028513,
    0.07709987174354177,
    0.033894853524689274,
    0.013328328780817557,
    0.004677734981047266,
    0.0014627165866811518,
    0.0004069520174449589,
    0.00010062192211963683,
    2.209049699858544e-05,
    4.302779463675122e-06,
    7.430983723414128e-07,
    1.1372725656979665e-07,
    1.541725790028002e-08,
];

const CF_DEPTH: u32 = 40;

/// `e^{-x²}` with the square split into exact high and low parts.
pub fn exp_neg_sq(x: f64) -> f64 {
    let hi = f64::from_bits(x.to_bits() & 0xFFFF_FFFF_F800_0000);
    let lo = x - hi;
    libm::exp(-hi * hi) * libm::exp(-lo * (x + hi))
}

fn erf_small(x: f64) -> f64 {
    let x2 = x * x;
    let q = 2.0 * x2;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > 1e-17 * sum {
        term *= q / (2.0 * k + 1.0);
        sum += term;
        k += 1.0;
    }
    FRAC_2_SQRT_PI * x * libm::exp(-x2) * sum
}

fn erfc_taylor(x: f64) -> f64 {
    let k = libm::round((x - 0.5) * 4.0).clamp(0.0, 14.0) as usize;
    let x0 = 0.5 + 0.25 * k as f64;
    let h = x - x0;
    if h == 0.0 {
        return ANCHORS[k];
    }
    // erfc(x0+h) = erfc(x0) - 2/√π e^{-x0²} Σ (-1)ⁿ Hₙ(x0) h^{n+1}/(n+1)!
    let (mut hm, mut hn) = (0.0, 1.0);
    let mut hp = h;
    let mut sum = h;
    for n in 1..60u32 {
        let next = 2.0 * x0 * hn - 2.0 * (n - 1) as f64 * hm;
        hm = hn;
        hn = next;
        hp *= -h / (n + 1) as f64;
        let term = hn * hp;
        sum += term;
        if n > 2 && libm::fabs(term) < 1e-18 * libm::fabs(sum) {
            break;
        }
    }
    ANCHORS[k] - FRAC_2_SQRT_PI * libm::exp(-x0 * x0) * sum
}

// 1/erfcx(x) * 1/√π for x ≥ 4 via f = x + (k/2)/f, k = N..1.
fn erfcx_cf(x: f64) -> f64 {
    let mut f = x;
    for k in (1..=CF_DEPTH).rev() {
        f = x + 0.5 * k as f64 / f;
    }
    1.0 / (SQRT_PI * f)
}

fn erfc_nonneg(x: f64) -> f64 {
    if x < 0.5 {
        1.0 - erf_small(x)
    } else if x < 4.0 {
        erfc_taylor(x)
    } else if x < 27.3 {
        erfcx_cf(x) * exp_neg_sq(x)
    } else {
        0.0
    }
}

/// Error function `2/√π ∫₀ˣ e^{-u²} du`.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return x;
    }
    let ax = libm::fabs(x);
    let r = if ax < 0.5 { erf_small(ax) } else { 1.0 - erfc_nonneg(ax) };
    libm::copysign(r, x)
}

/// Complementary error function, relatively accurate in the right tail.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return x;
    }
    if x >= 0.0 {
        erfc_nonneg(x)
    } else if x > -0.5 {
        1.0 + erf_small(-x)
    } else {
        2.0 - erfc_nonneg(-x)
    }
}

/// Scaled complementary error function `e^{x²} erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return x;
    }
    if x >= 4.0 {
        erfcx_cf(x)
    } else if x >= 0.0 {
        erfc_nonneg(x) / exp_neg_sq(x)
    } else {
        // overflows to +inf below about -26.6, as it should
        2.0 / exp_neg_sq(x) - erfcx(-x)
    }
}

/// `ln(1 - e^{-d})` for `d > 0`.
pub fn log1mexp(d: f64) -> f64 {
    if d <= LN_2 {
        libm::log(-libm::expm1(-d))
    } else {
        libm::log1p(-libm::exp(-d))
    }
}

/// `ln sinh x` for `x > 0`; `None` outside the domain.
pub fn log_sinh(x: f64) -> Option<f64> {
    if !(x > 0.0) {
        return None;
    }
    if x == f64::INFINITY {
        return Some(x);
    }
    Some(x - LN_2 + log1mexp(2.0 * x))
}

/// `e^{-u} - e^{-v}` without cancellation when `u ≈ v`.
///
/// Exactly antisymmetric: the arguments are ordered before evaluation.
pub fn gauss_pair_diff(u: f64, v: f64) -> f64 {
    if u == v {
        return 0.0;
    }
    if u < v {
        -libm::exp(-u) * libm::expm1(u - v)
    } else {
        libm::exp(-v) * libm::expm1(v - u)
    }
}

/// `sinh z / z`, equal to 1 at the origin.
pub fn sinhc(z: f64) -> f64 {
    let az = libm::fabs(z);
    if az < 0.5 {
        1.0 + sinhc_tail(az)
    } else {
        libm::sinh(az) / az
    }
}

// sinh(z)/z - 1 by its Taylor series, small z only
fn sinhc_tail(z: f64) -> f64 {
    let z2 = z * z;
    let mut term = z2 / 6.0;
    let mut sum = 0.0;
    let mut k = 2.0;
    while term > 1e-18 * (1.0 + sum) || sum == 0.0 {
        sum += term;
        term *= z2 / ((2.0 * k) * (2.0 * k + 1.0));
        k += 1.0;
        if term == 0.0 {
            break;
        }
    }
    sum
}

/// `ln(sinh z / z)`; finite for every finite `z`.
pub fn ln_sinhc(z: f64) -> f64 {
    let az = libm::fabs(z);
    if az < 0.5 {
        libm::log1p(sinhc_tail(az))
    } else {
        az - LN_2 + log1mexp(2.0 * az) - libm::log(az)
    }
}

/// `z coth z`, equal to 1 at the origin.
pub fn xcoth(z: f64) -> f64 {
    let az = libm::fabs(z);
    if az < 1e-4 {
        let z2 = az * az;
        1.0 + z2 / 3.0 - z2 * z2 / 45.0
    } else {
        az / libm::tanh(az)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // 40-digit oracle values
    const ERFC_REF: [(f64, f64); 12] = [
        (-3.0, 1.9999779095030015),
        (-0.3, 1.3286267594591274),
        (0.1, 0.887537083981715),
        (0.49, 0.4883317388114769),
        (0.6, 0.3961439091520741),
        (1.0, 0.15729920705028513),
        (2.3, 0.0011431765973566525),
        (3.9, 3.4792248597231765e-08),
        (4.0, 1.541725790028002e-08),
        (5.5, 7.357847917974398e-15),
        (10.0, 2.088487583762545e-45),
        (26.0, 5.663192408856143e-296),
    ];

    #[test]
    fn erfc_matches_oracle() {
        for &(x, want) in &ERFC_REF {
            let got = erfc(x);
            assert!(libm::fabs(got - want) <= 2e-15 * want, "x={x} got={got:e} want={want:e}");
        }
    }

    #[test]
    fn erf_reference_points() {
        assert_eq!(erf(0.0), 0.0);
        assert_eq!(erfc(0.0), 1.0);
        assert!(libm::fabs(erf(1.0) - 0.8427007929497149) < 1e-16);
        assert_eq!(erf(-0.7), -erf(0.7));
    }

    #[test]
    fn erfcx_large_and_negative() {
        // erfcx(30) = 0.018795888861416751..
        assert!(libm::fabs(erfcx(30.0) / 0.018795888861416751 - 1.0) < 1e-15);
        // erfcx(-1) = 5.00898008076228346..
        assert!(libm::fabs(erfcx(-1.0) / 5.0089800807622834 - 1.0) < 1e-14);
        assert!(libm::fabs(erfcx(2.0) / 0.25539567631050574 - 1.0) < 1e-14);
    }

    #[test]
    fn log_sinh_values() {
        assert!(libm::fabs(log_sinh(1.0).unwrap() - 0.16143936157119563) < 1e-16);
        assert!(libm::fabs(log_sinh(50.0).unwrap() - (50.0 - LN_2)) < 1e-14);
        assert!(log_sinh(-1.0).is_none());
        assert!(log_sinh(0.0).is_none());
        assert!(libm::fabs(log_sinh(1e-300).unwrap() - libm::log(1e-300)) < 1e-13);
        assert!(log_sinh(700.0).unwrap().is_finite());
    }

    #[test]
    fn pair_diff() {
        // oracle evaluated at the binary value of 1.000001
        let got = gauss_pair_diff(1.0, 1.000001);
        assert!(libm::fabs(got / 3.6787925720151887e-7 - 1.0) < 1e-13);
        assert_eq!(gauss_pair_diff(2.0, 0.5), -gauss_pair_diff(0.5, 2.0));
        assert_eq!(gauss_pair_diff(0.3, 0.3), 0.0);
        assert!(libm::fabs(gauss_pair_diff(0.0, 800.0) - 1.0) < 1e-13);
    }

    #[test]
    fn sinhc_and_xcoth() {
        assert_eq!(sinhc(0.0), 1.0);
        assert!(libm::fabs(sinhc(0.3) - libm::sinh(0.3) / 0.3) < 1e-15);
        assert!(libm::fabs(ln_sinhc(0.49) - libm::log(libm::sinh(0.49) / 0.49)) < 1e-15);
        assert!(libm::fabs(ln_sinhc(3.0) - libm::log(libm::sinh(3.0) / 3.0)) < 1e-15);
        assert!(libm::fabs(xcoth(1.0) - 1.3130352854993313) < 1e-15);
        assert_eq!(xcoth(0.0), 1.0);
        assert!(libm::fabs(xcoth(2e-4) - 2e-4 / libm::tanh(2e-4)) < 1e-15);
    }
}
