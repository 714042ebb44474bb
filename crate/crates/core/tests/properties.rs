use entrance_core::density::{cdf, pdf};
use entrance_core::girsanov::{image_density, TildeDensity, WeightAccumulator};
use entrance_core::numerics::{erf, erfc, gauss_pair_diff, integrate, log_sinh, Interval};
use entrance_core::simulate::simulate_path;
use entrance_core::{BoundarySide, ProcessSpec};
use proptest::prelude::*;

fn all_families() -> Vec<ProcessSpec> {
    vec![
        ProcessSpec::TabooI { a: 1.0 },
        ProcessSpec::CothII { a: 1.0, mu: -1.0 },
        ProcessSpec::LineAB { alpha: 0.5, beta: 1.0 },
        ProcessSpec::LineAB { alpha: -0.5, beta: 1.0 },
        ProcessSpec::LineABStar { alpha: -0.5, beta: 1.0 },
        ProcessSpec::ExcursionE { x0: 0.3, x_end: 0.7, horizon: 1.0 },
        ProcessSpec::MeanderM { mu: 1.0, x0: 0.2, horizon: 1.0 },
    ]
}

#[test]
fn erf_grid() {
    for k in 0..=10_000 {
        let x = -6.0 + 12.0 * k as f64 / 10_000.0;
        assert_eq!(erf(-x), -erf(x));
        assert!((erf(x) + erfc(x) - 1.0).abs() <= 1e-15, "x={x}");
    }
}

#[test]
fn drift_repels_from_boundary() {
    let t = 0.5;
    for spec in all_families() {
        let b = spec.boundary();
        let mut last = None;
        for k in 1..=8 {
            let d = 10f64.powi(-k);
            let (x, sign) = match b.side {
                BoundarySide::UpperBarrier => (b.position_at(t) - d, -1.0),
                BoundarySide::LowerBarrier => (b.position_at(t) + d, 1.0),
            };
            let mu = spec.drift(x, t).unwrap() * sign;
            assert!(mu > 0.0, "{spec:?} at distance {d}");
            if let Some(prev) = last {
                assert!(mu > prev, "{spec:?} repulsion must grow toward the boundary");
            }
            last = Some(mu);
        }
        assert!(last.unwrap() > 1e7);
    }
}

#[test]
fn coth_drift_tends_to_taboo() {
    let a = 1.0;
    let taboo = ProcessSpec::TabooI { a };
    for mu in [1e-2, 1e-3, 1e-4] {
        let coth = ProcessSpec::CothII { a, mu };
        for k in 0..=200 {
            let x = a - 10.0 + (10.0 - 1e-3) * k as f64 / 200.0;
            let gap = (coth.drift(x, 1.0).unwrap() - taboo.drift(x, 1.0).unwrap()).abs();
            assert!(gap <= 4.0 * mu * mu, "mu={mu} x={x} gap={gap}");
        }
    }
}

fn slope(h: &[f64], e: &[f64]) -> f64 {
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    num / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

#[test]
fn doob_drift_is_second_order() {
    let hs = [1e-3, 1e-4, 1e-5];
    for (spec, x, t) in [
        (ProcessSpec::MeanderM { mu: 1.0, x0: 0.2, horizon: 1.0 }, 0.5, 0.3),
        (ProcessSpec::ExcursionE { x0: 0.3, x_end: 0.7, horizon: 1.0 }, 0.4, 0.6),
    ] {
        let exact = spec.drift(x, t).unwrap();
        let errs: Vec<f64> = hs.iter().map(|&h| (spec.doob_drift_check(x, t, h).unwrap() - exact).abs()).collect();
        let s = slope(&hs, &errs);
        assert!((s - 2.0).abs() <= 0.1, "{spec:?}: slope {s} errors {errs:?}");
    }
}

#[test]
fn excursion_drift_ignores_base_drift() {
    let spec = ProcessSpec::ExcursionE { x0: 0.3, x_end: 0.7, horizon: 1.0 };
    for (x, t) in [(0.1, 0.2), (0.8, 0.5), (2.0, 0.9)] {
        let plain = spec.drift(x, t).unwrap();
        for mu in [-2.0, 0.0, 3.0] {
            let with = spec.excursion_drift_with_base(x, t, mu).unwrap();
            assert!((with - plain).abs() <= 1e-10 * plain.abs().max(1.0), "mu={mu}");
        }
    }
}

#[test]
fn short_time_concentration() {
    let t: f64 = 1e-4;
    let r = 5.0 * t.sqrt();
    for spec in [
        ProcessSpec::TabooI { a: 1.0 },
        ProcessSpec::CothII { a: 1.0, mu: -1.0 },
        ProcessSpec::LineAB { alpha: 0.5, beta: 1.0 },
        ProcessSpec::LineABStar { alpha: -0.5, beta: 1.0 },
    ] {
        let mass = cdf(&spec, r, t).unwrap() - cdf(&spec, -r, t).unwrap();
        assert!(mass >= 0.999, "{spec:?}: {mass}");
    }
}

fn upper_spec() -> impl Strategy<Value = ProcessSpec> {
    prop_oneof![
        (0.2..3.0f64).prop_map(|a| ProcessSpec::TabooI { a }),
        (0.2..3.0f64, prop_oneof![-3.0..-0.05f64, 0.05..3.0f64]).prop_map(|(a, mu)| ProcessSpec::CothII { a, mu }),
        (prop_oneof![-2.0..-0.05f64, 0.05..2.0f64], 0.2..2.0f64)
            .prop_map(|(alpha, beta)| ProcessSpec::LineAB { alpha, beta }),
    ]
}

proptest! {
    #[test]
    fn erf_is_odd(x in -6.0..6.0f64) {
        prop_assert_eq!(erf(-x), -erf(x));
    }

    #[test]
    fn log_sinh_matches_naive(x in 1e-8..30.0f64) {
        let naive = x.sinh().ln();
        prop_assert!((log_sinh(x).unwrap() - naive).abs() <= 1e-12 * naive.abs().max(1.0));
    }

    #[test]
    fn pair_diff_is_antisymmetric(u in -50.0..50.0f64, v in -50.0..50.0f64) {
        prop_assert_eq!(gauss_pair_diff(u, v), -gauss_pair_diff(v, u));
    }

    #[test]
    fn quintics_integrate_exactly(c in prop::array::uniform6(-5.0..5.0f64), lo in -3.0..0.0f64, w in 0.1..4.0f64) {
        let hi = lo + w;
        let f = |x: f64| c.iter().rev().fold(0.0, |acc, &k| acc * x + k);
        let anti = |x: f64| c.iter().enumerate().map(|(i, k)| k * x.powi(i as i32 + 1) / (i as f64 + 1.0)).sum::<f64>();
        let abs_tol = 1e-9;
        let got = integrate(f, Interval::new(lo, hi).unwrap(), abs_tol, 0.0).unwrap().value;
        prop_assert!((got - (anti(hi) - anti(lo))).abs() <= abs_tol);
    }

    #[test]
    fn line_drift_below_free_drift(alpha in 0.05..2.0f64, beta in 0.2..2.0f64, t in 0.0..5.0f64, d in 1e-6..10.0f64) {
        let spec = ProcessSpec::LineAB { alpha, beta };
        let x = beta + alpha * t - d;
        prop_assert!(spec.drift(x, t).unwrap() <= alpha);
    }

    #[test]
    fn image_equals_density(spec in upper_spec(), d in 0.01..3.0f64, t in 0.05..5.0f64) {
        let b = spec.boundary();
        let x = b.position_at(t) - d;
        let tilde = TildeDensity::new(spec).unwrap();
        let image = image_density(&tilde, &b, x, t).unwrap();
        let p = pdf(&spec, x, t).unwrap();
        prop_assert!((image - p).abs() <= 1e-10 * p.max(1e-300) + 1e-300, "{} vs {}", image, p);
    }

    #[test]
    fn weight_starts_at_one(x0 in 0.01..3.0f64, x_end in 0.0..3.0f64, mu in -2.0..2.0f64) {
        for spec in [
            ProcessSpec::ExcursionE { x0, x_end, horizon: 1.0 },
            ProcessSpec::MeanderM { mu, x0, horizon: 1.0 },
            ProcessSpec::CothII { a: x0, mu: mu + 2.5 },
        ] {
            prop_assert_eq!(WeightAccumulator::new(spec).unwrap().weight().value, 1.0);
        }
    }

    #[test]
    fn simulated_paths_stay_inside(seed in any::<u64>(), which in 0usize..7) {
        let spec = all_families()[which];
        let t_end = spec.horizon().map_or(2.0, |h| h - 0.01);
        let path = simulate_path(&spec, 1e-2, t_end, seed).unwrap();
        for (&t, &x) in path.times.iter().zip(&path.positions) {
            prop_assert!(spec.contains(x, t), "{:?} left at t={} x={}", spec, t, x);
        }
    }
}
