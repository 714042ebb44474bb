//! Point values frozen from a 40-digit reference implementation.

use entrance_core::density::pdf;
use entrance_core::girsanov::{tilde_density, z_closed};
use entrance_core::ProcessSpec;

const DENSITY: &[(ProcessSpec, f64, f64, f64)] = &[
    (ProcessSpec::TabooI { a: 1.0 }, -0.5, 1.0, 0.50180553940609641),
    (ProcessSpec::TabooI { a: 1.0 }, 0.9, 1.0, 0.0048233072866204269),
    (ProcessSpec::TabooI { a: 1.0 }, -3.0, 5.0, 0.23156836368798576),
    (ProcessSpec::CothII { a: 1.0, mu: -1.0 }, -0.5, 1.0, 0.36763545720022178),
    (ProcessSpec::CothII { a: 1.0, mu: -1.0 }, 0.9, 1.0, 0.0024934981440917399),
    (ProcessSpec::CothII { a: 1.0, mu: -1.0 }, -3.0, 5.0, 0.11035017463753808),
    (ProcessSpec::CothII { a: 0.5, mu: 2.0 }, 0.0, 0.3, 0.32423523901399585),
    (ProcessSpec::CothII { a: 0.5, mu: 2.0 }, -2.0, 2.0, 0.085629653908255919),
    (ProcessSpec::LineAB { alpha: 0.5, beta: 1.0 }, 0.0, 1.0, 0.46588566562998635),
    (ProcessSpec::LineAB { alpha: 0.5, beta: 1.0 }, 1.2, 1.0, 0.035923652048814671),
    (ProcessSpec::LineAB { alpha: 0.5, beta: 1.0 }, -2.0, 4.0, 0.17450152439862674),
    (ProcessSpec::LineAB { alpha: -0.5, beta: 1.0 }, 0.0, 1.0, 0.09520806134540345),
    (ProcessSpec::LineAB { alpha: -0.5, beta: 1.0 }, -2.0, 4.0, 0.047604030672701725),
    (ProcessSpec::LineABStar { alpha: -0.5, beta: 1.0 }, 0.0, 1.0, 0.11127386554920388),
    (ProcessSpec::LineABStar { alpha: -0.5, beta: 1.0 }, -2.0, 4.0, 0.078485777941144664),
    (ProcessSpec::ExcursionE { x0: 0.3, x_end: 0.7, horizon: 1.0 }, 0.4, 0.3, 0.76901788186152945),
    (ProcessSpec::ExcursionE { x0: 0.3, x_end: 0.7, horizon: 1.0 }, 1.1, 0.8, 0.7948427031246233),
    (ProcessSpec::ExcursionE { x0: 0.0, x_end: 0.5, horizon: 1.0 }, 0.4, 0.3, 0.87078829424889296),
    (ProcessSpec::ExcursionE { x0: 0.0, x_end: 0.0, horizon: 1.0 }, 0.4, 0.3, 0.90632839208033313),
    (ProcessSpec::MeanderM { mu: 1.0, x0: 0.2, horizon: 1.0 }, 0.4, 0.3, 0.51320955124965464),
    (ProcessSpec::MeanderM { mu: 1.0, x0: 0.2, horizon: 1.0 }, 1.5, 0.9, 0.52496980667726852),
    (ProcessSpec::MeanderM { mu: -0.7, x0: 0.0, horizon: 1.0 }, 0.4, 0.3, 0.75149266465538754),
    (ProcessSpec::MeanderM { mu: -0.7, x0: 0.0, horizon: 1.0 }, 1.0, 0.7, 0.84971503128296468),
];

#[test]
fn densities_match_reference() {
    for &(spec, x, t, want) in DENSITY {
        let got = pdf(&spec, x, t).unwrap();
        assert!((got - want).abs() <= 1e-12 * want.max(1e-3), "{spec:?} x={x} t={t}: {got} vs {want}");
    }
}

#[test]
fn tilde_is_signed_past_the_barrier() {
    let coth = ProcessSpec::CothII { a: 1.0, mu: -1.0 };
    let inside = tilde_density(&coth, -0.5, 1.0).unwrap();
    let outside = tilde_density(&coth, 1.5, 1.0).unwrap();
    assert!((inside - 0.38689797303510872).abs() < 1e-14);
    assert!((outside + 0.034832646270809241).abs() < 1e-14);
    let line = ProcessSpec::LineAB { alpha: 0.5, beta: 1.0 };
    assert!((tilde_density(&line, 0.0, 1.0).unwrap() - 0.49029606956596187).abs() < 1e-14);
}

#[test]
fn closed_weights_match_reference() {
    let coth = ProcessSpec::CothII { a: 1.0, mu: -1.0 };
    assert!((z_closed(&coth, 0.5, 1.0).unwrap().value - 0.26894142136999512).abs() < 1e-14);
    let line = ProcessSpec::LineAB { alpha: 0.5, beta: 1.0 };
    assert!((z_closed(&line, 0.5, 1.0).unwrap().value - 1.0).abs() < 1e-14);
    assert!((z_closed(&line, 0.0, 1.0).unwrap().value - 1.228989990914488).abs() < 1e-14);
}
