//! The default battery, grouped by acceptance criterion.

use entrance_core::ProcessSpec;

use super::{BatteryConfig, CheckRequest, FpGrid, Tolerances};

/// Criterion number and title. Criterion 10 (determinism) compares reruns
/// of 7 and 8 and has no requests of its own.
pub const CRITERIA: [(u8, &str); 10] = [
    (1, "normalization"),
    (2, "negative controls"),
    (3, "Fokker-Planck residual"),
    (4, "boundary flux"),
    (5, "moments"),
    (6, "asymptotics"),
    (7, "Girsanov identity"),
    (8, "simulation vs closed form"),
    (9, "limit identities"),
    (10, "determinism"),
];

const TABOO: ProcessSpec = ProcessSpec::TabooI { a: 1.0 };
const COTH: ProcessSpec = ProcessSpec::CothII { a: 1.0, mu: -1.0 };
const LINE_UP: ProcessSpec = ProcessSpec::LineAB { alpha: 0.5, beta: 1.0 };
const LINE_DOWN: ProcessSpec = ProcessSpec::LineAB { alpha: -0.5, beta: 1.0 };
const LINE_STAR: ProcessSpec = ProcessSpec::LineABStar { alpha: -0.5, beta: 1.0 };
const EXCURSION: ProcessSpec = ProcessSpec::ExcursionE { x0: 0.3, x_end: 0.7, horizon: 1.0 };
const MEANDER: ProcessSpec = ProcessSpec::MeanderM { mu: 1.0, x0: 0.0, horizon: 1.0 };

/// Two parameter sets per family, figure values first.
fn parameter_sets() -> Vec<ProcessSpec> {
    vec![
        TABOO,
        ProcessSpec::TabooI { a: 2.5 },
        COTH,
        ProcessSpec::CothII { a: 0.5, mu: 2.0 },
        LINE_UP,
        LINE_DOWN,
        LINE_STAR,
        ProcessSpec::LineABStar { alpha: -2.0, beta: 0.3 },
        EXCURSION,
        ProcessSpec::ExcursionE { x0: 0.0, x_end: 0.0, horizon: 2.0 },
        MEANDER,
        ProcessSpec::MeanderM { mu: -0.5, x0: 0.4, horizon: 2.0 },
    ]
}

fn times(spec: &ProcessSpec, infinite: [f64; 3]) -> Vec<f64> {
    match spec.horizon() {
        Some(h) => vec![0.1 * h, 0.5 * h, 0.9 * h],
        None => infinite.to_vec(),
    }
}

fn fp(spec: ProcessSpec, tilde: bool, x: (f64, f64), t: (f64, f64)) -> CheckRequest {
    CheckRequest::FpResidual { spec, tilde, grid: FpGrid { x, t, nx: 12, nt: 5, h: vec![0.04, 0.02, 0.01] } }
}

/// Requests making up criterion `n` (empty for 10 and unknown numbers).
pub fn criterion_checks(n: u8) -> Vec<CheckRequest> {
    match n {
        1 => parameter_sets()
            .into_iter()
            .flat_map(|spec| {
                times(&spec, [0.1, 1.0, 5.0]).into_iter().map(move |t| CheckRequest::Normalization { spec, t })
            })
            .collect(),
        2 => vec![
            CheckRequest::TildeNormalization { spec: COTH, t: 1.0 },
            CheckRequest::TildeFlux { spec: COTH, t: 1.0 },
        ],
        3 => vec![
            fp(TABOO, false, (-3.0, 0.8), (0.5, 1.5)),
            fp(COTH, false, (-3.0, 0.9), (0.5, 1.5)),
            fp(COTH, true, (-3.0, 0.9), (0.5, 1.5)),
            fp(LINE_UP, false, (-3.0, 1.0), (0.5, 1.5)),
            fp(LINE_STAR, false, (-3.0, 0.1), (0.5, 1.5)),
            fp(ProcessSpec::ExcursionE { x0: 0.2, x_end: 0.5, horizon: 1.0 }, false, (0.1, 2.0), (0.3, 0.7)),
            fp(ProcessSpec::MeanderM { mu: 1.0, x0: 0.2, horizon: 1.0 }, false, (0.1, 2.5), (0.3, 0.7)),
        ],
        4 => [TABOO, COTH, LINE_UP, LINE_DOWN, LINE_STAR, EXCURSION, MEANDER]
            .into_iter()
            .flat_map(|spec| {
                let ts: Vec<f64> = match spec.horizon() {
                    Some(h) => vec![0.5 * h, 0.9 * h, 0.95 * h],
                    None => vec![0.5, 1.0, 5.0],
                };
                ts.into_iter().map(move |t| CheckRequest::BoundaryFlux { spec, t })
            })
            .collect(),
        5 => {
            let mut v: Vec<CheckRequest> = parameter_sets()
                .into_iter()
                .filter(|s| !matches!(s, ProcessSpec::MeanderM { .. }))
                .flat_map(|spec| {
                    times(&spec, [0.1, 1.0, 10.0]).into_iter().map(move |t| CheckRequest::Moments { spec, t })
                })
                .collect();
            v.push(CheckRequest::ExcursionPinning { spec: EXCURSION });
            v.push(CheckRequest::ExcursionPinning {
                spec: ProcessSpec::ExcursionE { x0: 0.0, x_end: 0.0, horizon: 2.0 },
            });
            v
        }
        6 => [TABOO, COTH, LINE_UP, LINE_STAR]
            .into_iter()
            .map(|spec| CheckRequest::Asymptotics { spec, t_big: 1e4 })
            .collect(),
        7 => vec![
            CheckRequest::GirsanovMc { spec: COTH, t: 1.0, n: 100_000, dt: 1e-3, bins: 40, seed: 7001 },
            CheckRequest::GirsanovMc { spec: LINE_UP, t: 1.0, n: 100_000, dt: 1e-3, bins: 40, seed: 7002 },
            CheckRequest::ZPathConvergence { spec: COTH, t: 1.0, n: 1000, dts: vec![1e-2, 1e-3, 1e-4], seed: 7003 },
        ],
        8 => vec![
            CheckRequest::Simulation { spec: LINE_UP, n: 10_000, dt: 1e-3, t_end: 10.0, seed: 8001, coarsen: 10 },
            CheckRequest::Simulation { spec: LINE_STAR, n: 10_000, dt: 1e-4, t_end: 3.0, seed: 8002, coarsen: 10 },
        ],
        9 => vec![CheckRequest::Limits],
        _ => Vec::new(),
    }
}

/// Every criterion with the pinned tolerances.
pub fn default_config() -> BatteryConfig {
    BatteryConfig {
        tolerances: Tolerances::default(),
        checks: (1..=9).flat_map(criterion_checks).collect(),
        workers: crate::ensemble::default_workers(),
    }
}
