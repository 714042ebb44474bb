//! Deterministic checks: quadrature, finite differences and limit identities.

use std::collections::BTreeMap;

use entrance_core::density::{self, printed};
use entrance_core::girsanov::TildeDensity;
use entrance_core::numerics::{integrate, Interval};
use entrance_core::{BoundarySide, Error, ProcessSpec};

use super::{spec_tag, CheckKind, CheckResult, FpGrid, Outcome, Tolerances};

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

// ∫ f over [lo, hi] split at the given interior points
fn integrate_split(f: impl Fn(f64) -> f64, lo: f64, hi: f64, cuts: &[f64]) -> entrance_core::Result<f64> {
    let mut pts = vec![lo];
    pts.extend(cuts.iter().copied().filter(|&c| c > lo && c < hi));
    pts.push(hi);
    let mut total = 0.0;
    for w in pts.windows(2) {
        if let Some(iv) = Interval::new(w[0], w[1]) {
            total += integrate(&f, iv, 1e-15, 1e-13)?.value;
        }
    }
    Ok(total)
}

/// `|∫ p dx − 1|` over the state space.
pub fn check_normalization(spec: &ProcessSpec, t: f64, tol: f64) -> CheckResult {
    let id = format!("normalization/{}/t={t}", spec_tag(spec));
    match density::integrate_density(spec, t, f64::NEG_INFINITY, f64::INFINITY, |_| 1.0) {
        Ok(r) => CheckResult::measured(
            CheckKind::Normalization,
            id,
            Some(*spec),
            params(&[("t", t), ("mass", r.value)]),
            (r.value - 1.0).abs(),
            tol,
        ),
        Err(e) => CheckResult::errored(CheckKind::Normalization, id, Some(*spec), e),
    }
}

/// Tilde density of the coth family: mass below the barrier exceeds one
/// by the closed-form amount (negative control), while the signed mass on
/// the whole line is exactly one.
pub fn check_tilde_normalization(spec: &ProcessSpec, t: f64, tol: f64, match_tol: f64) -> Vec<CheckResult> {
    let tag = spec_tag(spec);
    let below_id = format!("tilde_normalization/{tag}/below_barrier/t={t}");
    let line_id = format!("tilde_normalization/{tag}/whole_line/t={t}");
    let kind = CheckKind::TildeNormalization;
    let ProcessSpec::CothII { a, mu } = *spec else {
        let e = Error::Unsupported { family: spec.family(), operation: "tilde normalization control" };
        return vec![CheckResult::errored(kind, below_id, Some(*spec), e)];
    };
    let tilde = match TildeDensity::new(*spec) {
        Ok(d) => d,
        Err(e) => return vec![CheckResult::errored(kind, below_id, Some(*spec), e)],
    };
    let f = |x: f64| tilde.eval(x, t).unwrap_or(f64::NAN);
    let mut out = Vec::new();
    match integrate_split(f, f64::NEG_INFINITY, a, &[0.0]) {
        Ok(mass) => {
            let predicted = printed::coth_tilde_mass_below_barrier(a, mu, t);
            let mut r = CheckResult::negative_control(
                kind,
                below_id,
                Some(*spec),
                params(&[("t", t), ("mass", mass), ("predicted_mass", predicted)]),
                (mass - 1.0).abs(),
                tol,
                (predicted - 1.0).abs(),
                match_tol,
            );
            if r.outcome == Outcome::ExpectedFail && mass <= 1.0 {
                r.outcome = Outcome::Fail;
                r.note = Some("mass below the barrier should exceed one".into());
            }
            out.push(r);
        }
        Err(e) => out.push(CheckResult::errored(kind, below_id, Some(*spec), e)),
    }
    match integrate_split(f, f64::NEG_INFINITY, f64::INFINITY, &[0.0, a]) {
        Ok(mass) => out.push(CheckResult::measured(
            kind,
            line_id,
            Some(*spec),
            params(&[("t", t), ("mass", mass)]),
            (mass - 1.0).abs(),
            tol,
        )),
        Err(e) => out.push(CheckResult::errored(kind, line_id, Some(*spec), e)),
    }
    out
}

/// Which function the forward equation is checked on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpTarget {
    Density,
    Tilde,
}

/// Convergence order of the central-difference residual
/// `∂ₜp + ∂ₓ(μp) − ½∂ₓₓp` in the stencil width; the defect is `|slope − 2|`.
pub fn check_fp_residual(spec: &ProcessSpec, target: FpTarget, grid: &FpGrid, slope_tol: f64) -> CheckResult {
    let label = match target {
        FpTarget::Density => "density",
        FpTarget::Tilde => "tilde",
    };
    let id = format!("fp_residual/{}/{label}", spec_tag(spec));
    let kind = CheckKind::FpResidual;
    match fp_slope(spec, target, grid) {
        Ok((slope, residuals)) => {
            let mut p = params(&[("slope", slope), ("nx", grid.nx as f64), ("nt", grid.nt as f64)]);
            for (h, r) in grid.h.iter().zip(&residuals) {
                p.insert(format!("max_residual_h={h}"), *r);
            }
            CheckResult::measured(kind, id, Some(*spec), p, (slope - 2.0).abs(), slope_tol)
        }
        Err(e) => CheckResult::errored(kind, id, Some(*spec), e),
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub(crate) fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn fp_slope(spec: &ProcessSpec, target: FpTarget, grid: &FpGrid) -> Result<(f64, Vec<f64>), String> {
    if grid.h.len() < 2 || grid.h.iter().any(|&h| !(h > 0.0)) {
        return Err("need at least two positive stencil widths".into());
    }
    let tilde = match target {
        FpTarget::Tilde => Some(TildeDensity::new(*spec).map_err(|e| e.to_string())?),
        FpTarget::Density => None,
    };
    let p = |x: f64, t: f64| -> Result<f64, String> {
        match &tilde {
            Some(d) => d.eval(x, t),
            None => density::pdf(spec, x, t),
        }
        .map_err(|e| e.to_string())
    };
    let flux = |x: f64, t: f64| -> Result<f64, String> { Ok(spec.drift(x, t).map_err(|e| e.to_string())? * p(x, t)?) };
    let hmax = grid.h.iter().copied().fold(0.0, f64::max);
    let xs = linspace(grid.x.0, grid.x.1, grid.nx);
    let ts = linspace(grid.t.0, grid.t.1, grid.nt);
    let b = spec.boundary();
    for &t in &ts {
        for &x in &xs {
            for (dx, dt) in [(-hmax, 0.0), (hmax, 0.0), (0.0, -hmax), (0.0, hmax)] {
                let (xx, tt) = (x + dx, t + dt);
                let inside_time = tt > 0.0 && spec.horizon().map_or(true, |h| tt < h);
                if !inside_time || !(b.depth(xx, tt) > 0.0) {
                    return Err(format!("stencil at (x={xx}, t={tt}) touches the boundary or horizon"));
                }
            }
        }
    }
    let mut residuals = Vec::with_capacity(grid.h.len());
    for &h in &grid.h {
        let mut worst: f64 = 0.0;
        for &t in &ts {
            for &x in &xs {
                let dpdt = (p(x, t + h)? - p(x, t - h)?) / (2.0 * h);
                let dflux = (flux(x + h, t)? - flux(x - h, t)?) / (2.0 * h);
                let lap = (p(x + h, t)? - 2.0 * p(x, t)? + p(x - h, t)?) / (h * h);
                worst = worst.max((dpdt + dflux - 0.5 * lap).abs());
            }
        }
        residuals.push(worst);
    }
    Ok((log_log_slope(&grid.h, &residuals), residuals))
}

const FLUX_OFFSET: f64 = 1e-4;

/// `|−½∂ₓp|` at the boundary by a one-sided fourth-order stencil.
pub fn check_boundary_flux(spec: &ProcessSpec, t: f64, tol: f64) -> CheckResult {
    let id = format!("boundary_flux/{}/t={t}", spec_tag(spec));
    let kind = CheckKind::BoundaryFlux;
    let b = spec.boundary();
    let edge = b.position_at(t);
    let inward = match b.side {
        BoundarySide::UpperBarrier => -1.0,
        BoundarySide::LowerBarrier => 1.0,
    };
    let h = FLUX_OFFSET;
    let mut f = [0.0; 5];
    for (k, slot) in f.iter_mut().enumerate() {
        match density::pdf(spec, edge + inward * k as f64 * h, t) {
            Ok(v) => *slot = v,
            Err(e) => return CheckResult::errored(kind, id, Some(*spec), e),
        }
    }
    // derivative along the inward direction
    let d_in = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
    let current = -0.5 * inward * d_in;
    CheckResult::measured(
        kind,
        id,
        Some(*spec),
        params(&[("t", t), ("boundary", edge), ("current", current), ("offset", h)]),
        current.abs(),
        tol,
    )
}

/// Negative control: the tilde density leaks probability through the barrier
/// at the closed-form rate.
pub fn check_tilde_flux(spec: &ProcessSpec, t: f64, tol: f64, match_tol: f64) -> CheckResult {
    let id = format!("tilde_flux/{}/t={t}", spec_tag(spec));
    let kind = CheckKind::TildeFlux;
    let ProcessSpec::CothII { a, mu } = *spec else {
        let e = Error::Unsupported { family: spec.family(), operation: "tilde flux control" };
        return CheckResult::errored(kind, id, Some(*spec), e);
    };
    let tilde = match TildeDensity::new(*spec) {
        Ok(d) => d,
        Err(e) => return CheckResult::errored(kind, id, Some(*spec), e),
    };
    // the tilde density is smooth across the barrier: central stencil
    let h = 1e-3;
    let f = |x: f64| tilde.eval(x, t).unwrap_or(f64::NAN);
    let dp = (f(a - 2.0 * h) - 8.0 * f(a - h) + 8.0 * f(a + h) - f(a + 2.0 * h)) / (12.0 * h);
    let current = -0.5 * dp;
    let predicted = printed::coth_tilde_barrier_current(a, mu, t);
    CheckResult::negative_control(
        kind,
        id,
        Some(*spec),
        params(&[("t", t), ("current", current)]),
        current.abs(),
        tol,
        predicted,
        match_tol,
    )
}

/// Closed-form mean and variance against quadrature.
///
/// The mean gap is scaled by `max(|mean|, sd)` so a mean crossing zero does
/// not blow up the relative error.
pub fn check_moments(spec: &ProcessSpec, t: f64, tol: f64) -> CheckResult {
    let id = format!("moments/{}/t={t}", spec_tag(spec));
    let kind = CheckKind::Moments;
    let closed = match density::closed_moments(spec, t) {
        Ok(m) => m,
        Err(Error::UnsupportedMoment { .. }) => {
            let mut r = CheckResult::measured(kind, id, Some(*spec), params(&[("t", t)]), f64::NAN, tol);
            r.outcome = Outcome::Skipped;
            return r.with_note("no closed-form moments; numeric moments only");
        }
        Err(e) => return CheckResult::errored(kind, id, Some(*spec), e),
    };
    let numeric = match density::numeric_moments(spec, t) {
        Ok(m) => m,
        Err(e) => return CheckResult::errored(kind, id, Some(*spec), e),
    };
    let scale = closed.mean.abs().max(closed.variance.sqrt());
    let mean_gap = (closed.mean - numeric.mean).abs() / scale;
    let var_gap = (closed.variance - numeric.variance).abs() / closed.variance;
    CheckResult::measured(
        kind,
        id,
        Some(*spec),
        params(&[
            ("t", t),
            ("mean", closed.mean),
            ("mean_quadrature", numeric.mean),
            ("variance", closed.variance),
            ("variance_quadrature", numeric.variance),
            ("mean_rel_gap", mean_gap),
            ("variance_rel_gap", var_gap),
        ]),
        mean_gap.max(var_gap),
        tol,
    )
}

/// Excursion moments collapse onto the pinned values at both ends.
pub fn check_excursion_pinning(spec: &ProcessSpec, tol: f64) -> CheckResult {
    let id = format!("excursion_pinning/{}", spec_tag(spec));
    let kind = CheckKind::ExcursionPinning;
    let ProcessSpec::ExcursionE { x0, x_end, horizon } = *spec else {
        let e = Error::Unsupported { family: spec.family(), operation: "pinning check" };
        return CheckResult::errored(kind, id, Some(*spec), e);
    };
    let ends = (density::closed_moments(spec, 0.0), density::closed_moments(spec, horizon));
    let (Ok(start), Ok(end)) = ends else {
        return CheckResult::errored(kind, id, Some(*spec), "moments at the pinned ends failed");
    };
    let defect =
        start.variance.abs().max(end.variance.abs()).max((start.mean - x0).abs()).max((end.mean - x_end).abs());
    CheckResult::measured(
        kind,
        id,
        Some(*spec),
        params(&[("variance_start", start.variance), ("variance_end", end.variance), ("mean_end", end.mean)]),
        defect,
        tol,
    )
}

/// Ratio of the exact moment to its leading large-time law, minus one.
///
/// Taboo: variance; coth: mean; lines: mean (after removing `αt` for the
/// shrinking line).
pub fn check_asymptotics(spec: &ProcessSpec, t_big: f64, tol: f64) -> CheckResult {
    let id = format!("asymptotics/{}/t={t_big}", spec_tag(spec));
    let kind = CheckKind::Asymptotics;
    let law = match density::asymptotics(spec) {
        Ok(l) => l,
        Err(e) => return CheckResult::errored(kind, id, Some(*spec), e),
    };
    let m = match density::closed_moments(spec, t_big) {
        Ok(m) => m,
        Err(e) => return CheckResult::errored(kind, id, Some(*spec), e),
    };
    let mean_ratio = (m.mean - law.centering(t_big)) / law.mean_leading(t_big);
    let var_ratio = m.variance / law.var_leading(t_big);
    let ratio = match spec {
        ProcessSpec::TabooI { .. } => var_ratio,
        _ => mean_ratio,
    };
    CheckResult::measured(
        kind,
        id,
        Some(*spec),
        params(&[("t", t_big), ("mean_ratio", mean_ratio), ("variance_ratio", var_ratio)]),
        (ratio - 1.0).abs(),
        tol,
    )
    .with_note(law.regime)
}

fn sup_gap(points: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    points.fold((0.0, 0.0), |(gap, peak), (a, b)| (gap.max((a - b).abs()), peak.max(b.abs())))
}

/// Limit identities between families and the typeset special cases.
pub fn check_limits(tol: &Tolerances) -> Vec<CheckResult> {
    let kind = CheckKind::Limits;
    let grid =
        |lo: f64, hi: f64, n: usize| -> Vec<f64> { (1..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect() };
    let mut out = Vec::new();

    // coth family with vanishing mu tends to the taboo process
    let taboo = ProcessSpec::TabooI { a: 1.0 };
    let coth = ProcessSpec::CothII { a: 1.0, mu: 1e-4 };
    let pts: Vec<(f64, f64)> =
        [0.5, 1.0, 2.0].iter().flat_map(|&t| grid(-6.0, 1.0, 700).into_iter().map(move |x| (x, t))).collect();
    let gap = pts
        .iter()
        .map(|&(x, t)| (density::pdf(&coth, x, t).unwrap_or(f64::NAN), density::pdf(&taboo, x, t).unwrap_or(f64::NAN)));
    let (g, _) = sup_gap(gap);
    out.push(CheckResult::measured(
        kind,
        "limits/coth_mu_to_zero".into(),
        Some(coth),
        params(&[("sup_gap", g)]),
        g,
        tol.limit_mu,
    ));

    // excursion with a vanishing endpoint tends to the standard excursion
    let exc = ProcessSpec::ExcursionE { x0: 0.0, x_end: 1e-6, horizon: 1.0 };
    let gap = [0.25, 0.5, 0.75].iter().flat_map(|&t| {
        grid(0.0, 4.0, 400)
            .into_iter()
            .map(move |x| (density::pdf(&exc, x, t).unwrap_or(f64::NAN), printed::standard_excursion(x, t, 1.0)))
    });
    let (g, _) = sup_gap(gap);
    out.push(CheckResult::measured(
        kind,
        "limits/excursion_endpoint_to_zero".into(),
        Some(exc),
        params(&[("sup_gap", g)]),
        g,
        tol.limit_excursion,
    ));

    // driftless meander against its typeset densities (relative sup-norm)
    let mut worst: f64 = 0.0;
    for &x0 in &[0.0, 0.3, 1.0] {
        let spec = ProcessSpec::MeanderM { mu: 0.0, x0, horizon: 1.0 };
        let pairs = [0.25, 0.5, 0.75].iter().flat_map(|&t| {
            grid(0.0, 5.0, 500).into_iter().map(move |x| {
                let typeset = if x0 == 0.0 {
                    printed::driftless_meander_from_origin(x, t, 1.0)
                } else {
                    printed::driftless_meander(x, t, x0, 1.0)
                };
                (density::pdf(&spec, x, t).unwrap_or(f64::NAN), typeset)
            })
        });
        let (g, peak) = sup_gap(pairs);
        worst = worst.max(g / peak);
    }
    out.push(CheckResult::measured(
        kind,
        "limits/driftless_meander".into(),
        Some(ProcessSpec::MeanderM { mu: 0.0, x0: 0.3, horizon: 1.0 }),
        params(&[("relative_sup_gap", worst)]),
        worst,
        tol.limit_exact,
    ));

    // final-time law of the driftless meander from the origin
    let mut worst: f64 = 0.0;
    for &horizon in &[1.0, 2.0] {
        let spec = ProcessSpec::MeanderM { mu: 0.0, x0: 0.0, horizon };
        let pairs = grid(0.0, 8.0, 800)
            .into_iter()
            .map(|x| (density::pdf(&spec, x, horizon).unwrap_or(f64::NAN), printed::rayleigh(x, horizon)));
        let (g, peak) = sup_gap(pairs);
        worst = worst.max(g / peak);
    }
    out.push(CheckResult::measured(
        kind,
        "limits/meander_final_rayleigh".into(),
        Some(ProcessSpec::MeanderM { mu: 0.0, x0: 0.0, horizon: 1.0 }),
        params(&[("relative_sup_gap", worst)]),
        worst,
        tol.limit_exact,
    ));
    out
}
