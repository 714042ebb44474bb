use alloc::collections::BinaryHeap;
use core::cmp::Ordering;
use core::fmt;

/// Maximum number of panels the adaptive integrator may create.
pub const MAX_SUBDIVISIONS: usize = 2000;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const GL16_X: [f64; 8] = [
    0.0950125098376374401853193354249581,
    0.281603550779258913230460501460496,
    0.458016777657227386342419442983578,
    0.617876244402643748446671764048791,
    0.755404408355003033895101194847442,
    0.865631202387831743880467897712393,
    0.944575023073232576077988415534608,
    0.989400934991649932596154173450333,
];
const GL16_W: [f64; 8] = [
    0.189450610455068496285396723208283,
    0.182603415044923588866763667969220,
    0.169156519395002538189312079030360,
    0.149595988816576732081501730547479,
    0.124628971255533872052476282192016,
    0.095158511682492784809925107602246,
    0.062253523938647892862843836994378,
    0.027152459411754094851780572456018,
];

/// Integration domain; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// `None` unless `lo < hi` (NaN ends are rejected).
    pub fn new(lo: f64, hi: f64) -> Option<Self> {
        (lo < hi).then_some(Interval { lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

/// Raised when the tolerance is not met; carries the best estimate reached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureError {
    pub best: QuadratureResult,
    pub subdivisions: usize,
    pub non_finite: bool,
}

impl fmt::Display for QuadratureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.non_finite {
            write!(f, "integrand produced a non-finite value")
        } else {
            write!(
                f,
                "quadrature did not converge after {} subdivisions (best {:e} ± {:e})",
                self.subdivisions, self.best.value, self.best.abs_error_estimate
            )
        }
    }
}

/// 16-point Gauss–Legendre rule on a finite interval.
pub fn gauss_legendre_16<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..8 {
        let d = h * GL16_X[i];
        s += GL16_W[i] * (f(c - d) + f(c + d));
    }
    s * h
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

// QUADPACK qk15 with its error heuristic
fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = libm::fabs(resk);
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let d = h * XGK[j];
        let f1 = f(c - d);
        let f2 = f(c + d);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (libm::fabs(f1) + libm::fabs(f2));
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[7] * libm::fabs(fc - mean);
    for j in 0..7 {
        resasc += WGK[j] * (libm::fabs(fv1[j] - mean) + libm::fabs(fv2[j] - mean));
    }
    let ah = libm::fabs(h);
    let result = resk * h;
    resabs *= ah;
    resasc *= ah;
    let mut err = libm::fabs((resk - resg) * h);
    if resasc != 0.0 && err != 0.0 {
        err = resasc * libm::pow(200.0 * err / resasc, 1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadratureResult, QuadratureError> {
    let (v, e) = kronrod15(&mut f, a, b);
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, err: e });
    let mut total = v;
    let mut total_err = e;
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            let best = QuadratureResult { value: total, abs_error_estimate: f64::INFINITY, evaluations };
            return Err(QuadratureError { best, subdivisions: heap.len(), non_finite: true });
        }
        if total_err <= abs_tol.max(rel_tol * libm::fabs(total)) {
            break;
        }
        if heap.len() >= MAX_SUBDIVISIONS {
            let best = QuadratureResult { value: total, abs_error_estimate: total_err, evaluations };
            return Err(QuadratureError { best, subdivisions: heap.len(), non_finite: false });
        }
        let worst = heap.pop().expect("heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        if !(worst.a < m && m < worst.b) {
            // panel cannot be split further in floating point
            let best = QuadratureResult { value: total, abs_error_estimate: total_err, evaluations };
            return Err(QuadratureError { best, subdivisions: heap.len() + 1, non_finite: false });
        }
        let (v1, e1) = kronrod15(&mut f, worst.a, m);
        let (v2, e2) = kronrod15(&mut f, m, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: m, value: v1, err: e1 });
        heap.push(Panel { a: m, b: worst.b, value: v2, err: e2 });
    }
    // re-sum to shed drift from the running updates
    let panels = heap.into_vec();
    let value = panels.iter().map(|p| p.value).sum();
    let abs_error_estimate = panels.iter().map(|p| p.err).sum();
    Ok(QuadratureResult { value, abs_error_estimate, evaluations })
}

fn upper_tail<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadratureResult, QuadratureError> {
    let g = |s: f64| {
        let w = 1.0 - s;
        let y = f(lo + s / w);
        if y == 0.0 {
            0.0
        } else {
            y / (w * w)
        }
    };
    adaptive(g, 0.0, 1.0, abs_tol, rel_tol)
}

fn lower_tail<F: FnMut(f64) -> f64>(
    mut f: F,
    hi: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadratureResult, QuadratureError> {
    let g = |s: f64| {
        let w = 1.0 - s;
        let y = f(hi - s / w);
        if y == 0.0 {
            0.0
        } else {
            y / (w * w)
        }
    };
    adaptive(g, 0.0, 1.0, abs_tol, rel_tol)
}

fn split(r: Result<QuadratureResult, QuadratureError>) -> (QuadratureResult, bool, usize, bool) {
    match r {
        Ok(v) => (v, false, 0, true),
        Err(e) => (e.best, e.non_finite, e.subdivisions, false),
    }
}

/// Adaptive Gauss–Kronrod (7/15) integration with bisection.
///
/// Infinite ends are mapped onto `[0, 1)` by `x = lo + s/(1-s)` (mirrored
/// for an infinite lower end); the whole real line is split at the origin.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    domain: Interval,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadratureResult, QuadratureError> {
    let Interval { lo, hi } = domain;
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => adaptive(f, lo, hi, abs_tol, rel_tol),
        (true, false) => upper_tail(f, lo, abs_tol, rel_tol),
        (false, true) => lower_tail(f, hi, abs_tol, rel_tol),
        (false, false) => {
            let (l, ln, ls, lok) = split(lower_tail(&mut f, 0.0, 0.5 * abs_tol, rel_tol));
            let (r, rn, rs, rok) = split(upper_tail(&mut f, 0.0, 0.5 * abs_tol, rel_tol));
            let best = QuadratureResult {
                value: l.value + r.value,
                abs_error_estimate: l.abs_error_estimate + r.abs_error_estimate,
                evaluations: l.evaluations + r.evaluations,
            };
            if lok && rok {
                Ok(best)
            } else {
                Err(QuadratureError { best, subdivisions: ls + rs, non_finite: ln || rn })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_tail() {
        let r = integrate(|x| libm::exp(-x), Interval::new(0.0, f64::INFINITY).unwrap(), 1e-12, 1e-12).unwrap();
        assert!(libm::fabs(r.value - 1.0) < 1e-10);
        assert!(r.evaluations >= 15);
    }

    #[test]
    fn gaussian_whole_line() {
        let r = integrate(
            |x| libm::exp(-0.5 * x * x),
            Interval::new(f64::NEG_INFINITY, f64::INFINITY).unwrap(),
            1e-13,
            1e-13,
        )
        .unwrap();
        assert!(libm::fabs(r.value - libm::sqrt(2.0 * core::f64::consts::PI)) < 1e-11);
        let r = integrate(libm::exp, Interval::new(f64::NEG_INFINITY, 0.0).unwrap(), 1e-12, 1e-12).unwrap();
        assert!(libm::fabs(r.value - 1.0) < 1e-10);
    }

    #[test]
    fn quintic_exact() {
        let f = |x: f64| 3.0 * x * x * x * x * x - x * x + 2.0;
        let r = integrate(f, Interval::new(-1.0, 2.0).unwrap(), 1e-12, 0.0).unwrap();
        let exact = 0.5 * (64.0 - 1.0) - (8.0 + 1.0) / 3.0 + 6.0;
        assert!(libm::fabs(r.value - exact) < 1e-12);
        assert!(libm::fabs(gauss_legendre_16(f, -1.0, 2.0) - exact) < 1e-12);
    }

    #[test]
    fn reports_failure_with_estimate() {
        let e = integrate(|x| libm::sin(1e6 * x), Interval::new(0.0, 1e3).unwrap(), 1e-14, 1e-14).unwrap_err();
        assert!(!e.non_finite);
        assert_eq!(e.subdivisions, MAX_SUBDIVISIONS);
        assert!(e.best.value.is_finite());
        let e = integrate(|x| 1.0 / x, Interval::new(0.0, 1.0).unwrap(), 1e-12, 1e-12).unwrap_err();
        assert!(e.best.value > 10.0);
        assert!(Interval::new(1.0, 1.0).is_none());
    }
}
