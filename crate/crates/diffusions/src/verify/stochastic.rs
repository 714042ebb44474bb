//! Monte Carlo checks: weighted Brownian histograms, Itô-sum weights and
//! simulated ensembles.

use std::collections::BTreeMap;

use entrance_core::density::{self, CdfTable};
use entrance_core::girsanov::{z_closed_signed, TildeDensity, WeightAccumulator};
use entrance_core::numerics::{integrate, Interval};
use entrance_core::rng::PathRng;
use entrance_core::simulate::EnsembleConfig;
use entrance_core::ProcessSpec;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::analytic::log_log_slope;
use super::{spec_tag, CheckKind, CheckResult, Outcome, Tolerances};
use crate::ensemble::{brownian_endpoints, simulate_ensemble, with_workers};

/// Effective sample size below which a weighted histogram is inconclusive,
/// per bin.
const MIN_ESS_PER_BIN: f64 = 5.0;

const KS_TABLE_CELLS: usize = 2048;

/// Wald statistic `n δᵀ S⁻¹ δ` of weighted bin means against predictions.
///
/// `mean[k]` and `second[k]` are the sample means of `Z·1_k` and `Z²·1_k`.
/// Returns `None` when the covariance is singular.
pub fn wald_statistic(mean: &[f64], second: &[f64], predicted: &[f64], n: usize) -> Option<f64> {
    let k = mean.len();
    let nf = n as f64;
    let cov = DMatrix::from_fn(k, k, |i, j| {
        let diag = if i == j { second[i] } else { 0.0 };
        (diag - mean[i] * mean[j]) * nf / (nf - 1.0)
    });
    let delta = DVector::from_fn(k, |i, _| mean[i] - predicted[i]);
    let chol = cov.cholesky()?;
    let solved = chol.solve(&delta);
    Some(nf * delta.dot(&solved))
}

/// `Z`-weighted histogram of driftless endpoints next to the tilde masses.
#[derive(Debug, Clone, PartialEq)]
pub struct GirsanovHistogram {
    /// `bins + 1` edges; the outer ones are infinite.
    pub edges: Vec<f64>,
    /// Sample mean of `Z·1_k` per bin.
    pub weighted: Vec<f64>,
    /// Sample mean of `Z²·1_k` per bin.
    pub second: Vec<f64>,
    /// Signed tilde mass per bin.
    pub predicted: Vec<f64>,
    /// `(Σ|Z|)² / ΣZ²`.
    pub ess: f64,
    pub n: usize,
}

impl GirsanovHistogram {
    /// Standard error of each weighted bin mass.
    pub fn stderr(&self) -> Vec<f64> {
        let nf = self.n as f64;
        self.weighted.iter().zip(&self.second).map(|(m, q)| ((q - m * m).max(0.0) / nf).sqrt()).collect()
    }
}

/// Build the histogram over `bins` cells that are equiprobable for the
/// driftless endpoint, using the closed-form signed weight.
pub fn girsanov_histogram(
    spec: &ProcessSpec,
    t: f64,
    n: usize,
    dt: f64,
    bins: usize,
    seed: u64,
    workers: usize,
) -> Result<GirsanovHistogram, String> {
    if bins < 2 || n < 2 || !(dt > 0.0) || !(t > 0.0) {
        return Err("need bins >= 2, n >= 2, dt > 0 and t > 0".into());
    }
    let tilde = TildeDensity::new(*spec).map_err(|e| e.to_string())?;
    let steps = (t / dt).round().max(1.0) as usize;
    let x0 = spec.x0();
    let normal = Normal::new(x0, t.sqrt()).map_err(|e| e.to_string())?;
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend((1..bins).map(|k| normal.inverse_cdf(k as f64 / bins as f64)));
    edges.push(f64::INFINITY);

    let ends = brownian_endpoints(x0, t, steps, n, seed, workers);
    let mut weighted = vec![0.0; bins];
    let mut second = vec![0.0; bins];
    let (mut sum_abs, mut sum_sq) = (0.0, 0.0);
    for &w in &ends {
        let z = z_closed_signed(spec, w, t).map_err(|e| e.to_string())?;
        let k = edges.partition_point(|&e| e <= w) - 1;
        weighted[k] += z;
        second[k] += z * z;
        sum_abs += z.abs();
        sum_sq += z * z;
    }
    let nf = n as f64;
    weighted.iter_mut().for_each(|m| *m /= nf);
    second.iter_mut().for_each(|m| *m /= nf);

    let b = spec.boundary().position_at(t);
    let mut predicted = Vec::with_capacity(bins);
    for w in edges.windows(2) {
        let mut cuts = vec![w[0]];
        if b > w[0] && b < w[1] {
            cuts.push(b);
        }
        cuts.push(w[1]);
        let mut mass = 0.0;
        for c in cuts.windows(2) {
            let Some(iv) = Interval::new(c[0], c[1]) else { continue };
            mass +=
                integrate(|x| tilde.eval(x, t).unwrap_or(f64::NAN), iv, 1e-15, 1e-12).map_err(|e| e.to_string())?.value;
        }
        predicted.push(mass);
    }
    Ok(GirsanovHistogram { edges, weighted, second, predicted, ess: sum_abs * sum_abs / sum_sq, n })
}

/// Girsanov identity: the `Z`-weighted histogram of driftless endpoints
/// matches the bin masses of the (signed) tilde density.
///
/// The last bin is dropped so the Wald statistic is χ² with `bins − 1`
/// degrees of freedom.
#[allow(clippy::too_many_arguments)]
pub fn check_girsanov_mc(
    spec: &ProcessSpec,
    t: f64,
    n: usize,
    dt: f64,
    bins: usize,
    seed: u64,
    level: f64,
    workers: usize,
) -> CheckResult {
    let id = format!("girsanov_mc/{}/t={t}", spec_tag(spec));
    let kind = CheckKind::GirsanovMc;
    let h = match girsanov_histogram(spec, t, n, dt, bins, seed, workers) {
        Ok(h) => h,
        Err(e) => return CheckResult::errored(kind, id, Some(*spec), e),
    };
    let chi2 = ChiSquared::new((bins - 1) as f64).expect("positive dof");
    let critical = chi2.inverse_cdf(1.0 - level);
    let mut p = BTreeMap::new();
    p.insert("t".into(), t);
    p.insert("n".into(), n as f64);
    p.insert("dt".into(), dt);
    p.insert("bins".into(), bins as f64);
    p.insert("ess".into(), h.ess);
    p.insert("critical".into(), critical);
    if h.ess < MIN_ESS_PER_BIN * bins as f64 {
        let mut r = CheckResult::measured(kind, id, Some(*spec), p, f64::NAN, critical);
        r.outcome = Outcome::Inconclusive;
        return r.with_note(format!("effective sample size {:.1} too small for {bins} bins", h.ess));
    }
    let k = bins - 1;
    let Some(stat) = wald_statistic(&h.weighted[..k], &h.second[..k], &h.predicted[..k], n) else {
        let mut r = CheckResult::measured(kind, id, Some(*spec), p, f64::NAN, critical);
        r.outcome = Outcome::Inconclusive;
        return r.with_note("empty bins make the weight covariance singular");
    };
    p.insert("p_value".into(), 1.0 - chi2.cdf(stat));
    CheckResult::measured(kind, id, Some(*spec), p, stat, critical)
}

/// Paths whose distance to the barrier never drops below this are also
/// summarized separately, where the drift is smooth.
const FAR_DEPTH: f64 = 0.2;

/// Strong convergence of Itô-sum weights to the closed form.
///
/// Paths are simulated at the finest step and coarsened by summing
/// increments. A path that leaves the state space in continuous time has
/// zero weight under the conditioned law and is excluded; crossings between
/// fine grid points are detected with the Brownian-bridge probability
/// `exp(−2 d₀ d₁ / dt)`, exact for the linear boundaries used here.
///
/// The verdict uses every surviving path. The slope restricted to paths
/// staying [`FAR_DEPTH`] away from the barrier is reported alongside: close
/// to the barrier the drift is singular and single steps can carry O(1)
/// weight errors.
pub fn check_z_path_convergence(
    spec: &ProcessSpec,
    t: f64,
    n: usize,
    dts: &[f64],
    seed: u64,
    tol: &Tolerances,
    workers: usize,
) -> Vec<CheckResult> {
    let tag = spec_tag(spec);
    let slope_id = format!("z_path_convergence/{tag}/slope/t={t}");
    let kind = CheckKind::ZPathConvergence;
    let fail = |e: String| vec![CheckResult::errored(kind, slope_id.clone(), Some(*spec), e)];
    let mut dts: Vec<f64> = dts.to_vec();
    dts.sort_by(|a, b| a.total_cmp(b));
    let Some(&fine) = dts.first() else { return fail("no step sizes".into()) };
    if dts.len() < 2 || !(fine > 0.0) {
        return fail("need at least two positive step sizes".into());
    }
    let ratios: Vec<usize> = dts.iter().map(|d| (d / fine).round() as usize).collect();
    let steps = (t / fine).round() as usize;
    if dts.iter().zip(&ratios).any(|(d, &r)| (r as f64 * fine - d).abs() > 1e-9 * d || steps % r != 0)
        || (steps as f64 * fine - t).abs() > 1e-9 * t
    {
        return fail("steps must nest and divide t".into());
    }
    if let Err(e) = WeightAccumulator::new(*spec) {
        return fail(e.to_string());
    }
    let sd = fine.sqrt();
    let levels = ratios.len();
    let boundary = spec.boundary();
    // per surviving path: squared error per level and whether it stayed far
    let per_path: Vec<Option<(Vec<f64>, bool)>> = with_workers(workers, || {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = PathRng::new(seed, i as u64);
                let mut accs: Vec<WeightAccumulator> =
                    (0..levels).map(|_| WeightAccumulator::new(*spec).expect("checked")).collect();
                let mut pending = vec![0.0; levels];
                let mut w = spec.x0();
                let mut d0 = boundary.depth(w, 0.0);
                let mut far = d0 >= FAR_DEPTH;
                for k in 1..=steps {
                    let dw = sd * rng.normal();
                    w += dw;
                    let d1 = boundary.depth(w, k as f64 * fine);
                    let bridge_hit = rng.uniform() < (-2.0 * d0 * d1 / fine).exp();
                    if !(d1 > 0.0) || bridge_hit {
                        return None;
                    }
                    far &= d1 >= FAR_DEPTH;
                    d0 = d1;
                    for (l, &r) in ratios.iter().enumerate() {
                        pending[l] += dw;
                        if k % r == 0 {
                            accs[l].advance(pending[l], r as f64 * fine).ok()?;
                            pending[l] = 0.0;
                        }
                    }
                }
                let closed = z_closed_signed(spec, w, t).ok()?;
                Some((accs.iter().map(|a| (a.weight().value - closed).powi(2)).collect(), far))
            })
            .collect()
    });
    let rms_of = |far_only: bool| -> (Vec<f64>, usize) {
        let kept: Vec<&Vec<f64>> =
            per_path.iter().flatten().filter(|(_, far)| !far_only || *far).map(|(e, _)| e).collect();
        let rms = (0..levels).map(|l| (kept.iter().map(|e| e[l]).sum::<f64>() / kept.len() as f64).sqrt()).collect();
        (rms, kept.len())
    };
    let (rms, kept) = rms_of(false);
    if kept < 2 {
        return fail("almost every path left the state space".into());
    }
    let (rms_far, kept_far) = rms_of(true);
    let kept_errors: Vec<&Vec<f64>> = per_path.iter().flatten().map(|(e, _)| e).collect();
    let mean_abs: Vec<f64> =
        (0..levels).map(|l| kept_errors.iter().map(|e| e[l].sqrt()).sum::<f64>() / kept as f64).collect();
    let slope = log_log_slope(&dts, &rms);
    let mut p = BTreeMap::new();
    p.insert("slope".into(), slope);
    p.insert("paths_kept".into(), kept as f64);
    p.insert("paths".into(), n as f64);
    p.insert("paths_far".into(), kept_far as f64);
    p.insert("far_depth".into(), FAR_DEPTH);
    if kept_far >= 2 {
        p.insert("slope_far".into(), log_log_slope(&dts, &rms_far));
    }
    for (i, d) in dts.iter().enumerate() {
        p.insert(format!("rms_dt={d}"), rms[i]);
        p.insert(format!("mean_abs_dt={d}"), mean_abs[i]);
        if kept_far >= 2 {
            p.insert(format!("rms_far_dt={d}"), rms_far[i]);
        }
    }
    let center = 0.5 * (tol.z_slope_lo + tol.z_slope_hi);
    let half = 0.5 * (tol.z_slope_hi - tol.z_slope_lo);
    let mut out = vec![CheckResult::measured(kind, slope_id, Some(*spec), p.clone(), (slope - center).abs(), half)
        .with_note(format!("slope must lie in [{}, {}]", tol.z_slope_lo, tol.z_slope_hi))];
    // the pinned bound is on the mean absolute error; the RMS is heavier
    // tailed (paths that graze the barrier) and is reported alongside
    if let Some(l) = dts.iter().position(|&d| (d - 1e-3).abs() < 1e-15) {
        out.push(
            CheckResult::measured(
                kind,
                format!("z_path_convergence/{tag}/mean_abs_dt=0.001/t={t}"),
                Some(*spec),
                p,
                mean_abs[l],
                tol.z_gap,
            )
            .with_note(format!("rms {:.3e}", rms[l])),
        );
    }
    out
}

/// Kolmogorov–Smirnov distance of a sample to a tabulated CDF.
pub(crate) fn ks_distance(sample: &[f64], table: &CdfTable) -> entrance_core::Result<f64> {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let total = table.total();
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = table.eval(x)? / total;
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Simulated ensemble against the closed-form mean and the exact law.
///
/// The bias allowance is measured: the same noise drives a run with steps
/// `coarsen` times larger, and the weak-order-one extrapolation
/// `|m(dt) − m(k·dt)| / (k − 1)` estimates the bias at `dt`.
#[allow(clippy::too_many_arguments)]
pub fn check_simulation(
    spec: &ProcessSpec,
    n: usize,
    dt: f64,
    t_end: f64,
    seed: u64,
    coarsen: usize,
    tol: &Tolerances,
    workers: usize,
) -> Vec<CheckResult> {
    let tag = spec_tag(spec);
    let mean_id = format!("simulation_mean/{tag}/dt={dt}/t={t_end}");
    let ks_id = format!("simulation_ks/{tag}/dt={dt}/t={t_end}");
    let fail = |e: String| {
        vec![
            CheckResult::errored(CheckKind::SimulationMean, mean_id.clone(), Some(*spec), &e),
            CheckResult::errored(CheckKind::SimulationKs, ks_id.clone(), Some(*spec), e),
        ]
    };
    if coarsen < 2 {
        return fail("coarsening factor must be at least 2".into());
    }
    let steps = (t_end / dt).round() as usize;
    let fine_cfg = EnsembleConfig { record_every: steps.max(1), ..EnsembleConfig::new(dt, t_end, n, seed) };
    let coarse_cfg = EnsembleConfig {
        dt: dt * coarsen as f64,
        substeps: coarsen,
        record_every: (steps / coarsen).max(1),
        ..fine_cfg
    };
    let fine = match simulate_ensemble(spec, &fine_cfg, workers) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    let coarse = match simulate_ensemble(spec, &coarse_cfg, workers) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    let (closed, _) = match density::moments(spec, t_end) {
        Ok(m) => m,
        Err(e) => return fail(e.to_string()),
    };
    let last = |v: &Vec<f64>| *v.last().expect("nonempty grid");
    let m_fine = last(&fine.stats.mean_hat);
    let m_coarse = last(&coarse.stats.mean_hat);
    let stderr = last(&fine.stats.stderr);
    let bias = (m_fine - m_coarse).abs() / (coarsen - 1) as f64;
    let allowance = tol.mean_sigmas * stderr + bias;
    let mut p = BTreeMap::new();
    p.insert("n".into(), n as f64);
    p.insert("dt".into(), dt);
    p.insert("t_end".into(), t_end);
    p.insert("mean_hat".into(), m_fine);
    p.insert("mean_hat_coarse".into(), m_coarse);
    p.insert("mean_closed".into(), closed.mean);
    p.insert("stderr".into(), stderr);
    p.insert("bias_allowance".into(), bias);
    let mean_check = CheckResult::measured(
        CheckKind::SimulationMean,
        mean_id,
        Some(*spec),
        p,
        (m_fine - closed.mean).abs(),
        allowance,
    );

    let ks = CdfTable::new(spec, t_end, KS_TABLE_CELLS).and_then(|table| ks_distance(&fine.endpoints, &table));
    let ks_check = match ks {
        Ok(d) => {
            let mut p = BTreeMap::new();
            p.insert("n".into(), n as f64);
            p.insert("dt".into(), dt);
            p.insert("t_end".into(), t_end);
            p.insert("ks_distance".into(), d);
            CheckResult::measured(CheckKind::SimulationKs, ks_id, Some(*spec), p, d, tol.ks)
        }
        Err(e) => CheckResult::errored(CheckKind::SimulationKs, ks_id, Some(*spec), e),
    };
    vec![mean_check, ks_check]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wald_reduces_to_pearson_for_unit_weights() {
        // unit weights: Var(1_k) = m_k(1 - m_k) ... covariance of a multinomial
        let m = [0.2, 0.3];
        let expected = [0.25, 0.25];
        let n = 1000;
        let stat = wald_statistic(&m, &m, &expected, n).unwrap();
        let cov = nalgebra::Matrix2::new(0.16, -0.06, -0.06, 0.21) * (n as f64 / (n as f64 - 1.0));
        let d = nalgebra::Vector2::new(-0.05, 0.05);
        let direct = n as f64 * d.dot(&(cov.try_inverse().unwrap() * d));
        assert!((stat - direct).abs() < 1e-10 * direct);
    }

    #[test]
    fn tiny_sample_is_inconclusive() {
        let spec = ProcessSpec::CothII { a: 1.0, mu: -1.0 };
        let r = check_girsanov_mc(&spec, 1.0, 10, 1e-3, 40, 1, 0.01, 1);
        assert_eq!(r.outcome, Outcome::Inconclusive);
    }
}
