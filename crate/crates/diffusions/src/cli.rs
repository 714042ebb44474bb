//! Command-line front end. Every command writes one table (or report) with
//! a provenance header; `--out` files are replaced atomically.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use entrance_core::density::{self, asymptotics, closed_moments, MomentProvenance};
use entrance_core::girsanov::{image_density, TildeDensity};
use entrance_core::simulate::{ensemble_path, EnsembleConfig};

use crate::ensemble::{default_workers, simulate_ensemble};
use crate::io::{parse_grid, read_spec, write_atomic, Header, IoError, Table};
use crate::verify::{self, CheckKind, CheckResult, Outcome, Tolerances};

#[derive(Debug, Parser)]
#[command(name = "entrance-diffusions", version, about = "Conditioned diffusions with entrance boundaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Density, tilde density and image density on an x grid.
    Density(DensityArgs),
    /// Euler ensemble statistics with the closed-form mean alongside.
    Simulate(SimulateArgs),
    /// Mean and variance over a time grid, with the large-time law.
    Moments(MomentsArgs),
    /// Run the verification battery.
    Verify(VerifyArgs),
    /// Weighted histogram of driftless endpoints against tilde bin masses.
    GirsanovDemo(DemoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct Output {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct DensityArgs {
    /// Process as JSON, or @file.
    #[arg(long)]
    spec: String,
    #[arg(long)]
    t: f64,
    /// lo:hi:step, hi excluded.
    #[arg(long, allow_hyphen_values = true)]
    x_grid: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    spec: String,
    #[arg(long)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record statistics every this many steps.
    #[arg(long, default_value_t = 1)]
    every: usize,
    /// Also write the first K paths to `<out>.path<i>.<ext>`.
    #[arg(long, value_name = "K")]
    paths: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct MomentsArgs {
    #[arg(long)]
    spec: String,
    /// lo:hi:step, hi excluded.
    #[arg(long, conflicts_with = "t")]
    t_grid: Option<String>,
    #[arg(long)]
    t: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Restrict to `check=<kind>` or `family=<label>`; repeatable.
    #[arg(long, value_name = "KEY=VALUE")]
    only: Vec<String>,
    /// Override a tolerance, e.g. `normalization=1e-10`; repeatable.
    #[arg(long, value_name = "KEY=VALUE")]
    tol: Vec<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long)]
    spec: String,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 40)]
    bins: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

enum Failure {
    /// Bad input; exit 2.
    Invalid(String),
    /// Failed checks or IO; exit 1.
    Failed(String),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Write { .. } => Failure::Failed(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(e.to_string())
}

/// Entry point for the binary.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Parse `args` (program name first) and run; returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let invocation = invocation_text(&args);
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Density(a) => cmd_density(a, &invocation),
        Command::Simulate(a) => cmd_simulate(a, &invocation),
        Command::Moments(a) => cmd_moments(a, &invocation),
        Command::Verify(a) => cmd_verify(a, &invocation),
        Command::GirsanovDemo(a) => cmd_girsanov_demo(a, &invocation),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Failed(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}

/// Arguments as recorded in headers; the output path is left out so a
/// rerun into another file gives the same bytes.
fn invocation_text(args: &[OsString]) -> String {
    let mut kept = Vec::new();
    let mut skip = false;
    for a in args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()) {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            kept.push(a);
        }
    }
    kept.join(" ")
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_atomic(p, text).map_err(Failure::from),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::Failed(e.to_string()))
        }
    }
}

fn emit_table(output: &Output, table: &Table, header: &Header) -> Result<(), Failure> {
    let text = match output.format.unwrap_or(Format::Csv) {
        Format::Csv => table.to_csv(header),
        Format::Json => table.to_json(header),
    };
    emit(output.out.as_deref(), &text)
}

fn cmd_density(a: DensityArgs, invocation: &str) -> Result<(), Failure> {
    let spec = read_spec(&a.spec)?;
    let xs = parse_grid(&a.x_grid)?;
    if !(a.t > 0.0) || !a.t.is_finite() {
        return Err(invalid("--t must be positive"));
    }
    if let Some(h) = spec.horizon() {
        if a.t >= h {
            return Err(invalid(format!("--t must be below the horizon {h}")));
        }
    }
    // the tilde density needs an interior start
    let tilde = TildeDensity::new(spec).ok();
    let boundary = spec.boundary();
    let mut table = Table::new(&["x", "pdf", "tilde_pdf", "image_pdf"]);
    for &x in &xs {
        let p = density::pdf(&spec, x, a.t).map_err(invalid)?;
        let (tp, ip) = match &tilde {
            Some(td) => (td.eval(x, a.t).map_err(invalid)?, image_density(td, &boundary, x, a.t).map_err(invalid)?),
            None => (f64::NAN, f64::NAN),
        };
        table.push(vec![x, p, tp, ip]);
    }
    emit_table(&a.output, &table, &Header::new(invocation, Some(spec), None, None))
}

fn path_file(out: &Path, i: usize, format: Format) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    out.with_file_name(format!("{stem}.path{i}.{ext}"))
}

fn cmd_simulate(a: SimulateArgs, invocation: &str) -> Result<(), Failure> {
    let spec = read_spec(&a.spec)?;
    let mut cfg = EnsembleConfig::new(a.dt, a.t_end, a.n, a.seed);
    cfg.record_every = a.every;
    if a.paths.is_some_and(|k| k > 0) && a.output.out.is_none() {
        return Err(invalid("--paths needs --out"));
    }
    if a.paths.is_some_and(|k| k > a.n) {
        return Err(invalid("--paths exceeds --n"));
    }
    let run = simulate_ensemble(&spec, &cfg, default_workers()).map_err(invalid)?;
    let s = &run.stats;
    let mut table = Table::new(&["t", "mean", "var", "stderr", "n", "closed_mean"]);
    for k in 0..s.t_grid.len() {
        let t = s.t_grid[k];
        let closed = closed_moments(&spec, t).map_or(f64::NAN, |m| m.mean);
        table.push(vec![t, s.mean_hat[k], s.var_hat[k], s.stderr[k], s.n_paths as f64, closed]);
    }
    let header = Header::new(invocation, Some(spec), Some(a.seed), Some(a.dt));
    let format = a.output.format.unwrap_or(Format::Csv);
    if let (Some(k), Some(out)) = (a.paths, a.output.out.as_deref()) {
        for i in 0..k {
            let path = ensemble_path(&spec, &cfg, i).map_err(invalid)?;
            let mut t = Table::new(&["t", "x"]);
            for (ti, xi) in path.times.iter().zip(&path.positions) {
                t.push(vec![*ti, *xi]);
            }
            let h = Header::new(&format!("{} path={i}", header.command), Some(spec), Some(a.seed), Some(a.dt));
            let text = match format {
                Format::Csv => t.to_csv(&h),
                Format::Json => t.to_json(&h),
            };
            write_atomic(&path_file(out, i, format), &text)?;
        }
    }
    emit_table(&a.output, &table, &header)
}

fn cmd_moments(a: MomentsArgs, invocation: &str) -> Result<(), Failure> {
    let spec = read_spec(&a.spec)?;
    let ts = match (&a.t_grid, a.t) {
        (Some(g), _) => parse_grid(g)?,
        (None, Some(t)) => vec![t],
        (None, None) => return Err(invalid("give --t or --t-grid")),
    };
    let law = asymptotics(&spec).ok();
    let mut table = Table::new(&["t", "mean", "variance", "asymptotic_mean", "asymptotic_var"]);
    let mut tags = Vec::with_capacity(ts.len());
    for &t in &ts {
        let (m, prov) = density::moments(&spec, t).map_err(invalid)?;
        let (am, av) = law.map_or((f64::NAN, f64::NAN), |l| (l.mean(t), l.var_leading(t)));
        table.push(vec![t, m.mean, m.variance, am, av]);
        tags.push(match prov {
            MomentProvenance::ClosedForm => "closed_form".to_string(),
            MomentProvenance::Numeric => "numeric".to_string(),
        });
    }
    table.tags = Some(("provenance".into(), tags));
    emit_table(&a.output, &table, &Header::new(invocation, Some(spec), None, None))
}

fn key_value(text: &str) -> Result<(&str, &str), Failure> {
    text.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| invalid(format!("expected key=value, got '{text}'")))
}

fn cmd_verify(a: VerifyArgs, invocation: &str) -> Result<(), Failure> {
    let mut config = verify::default_config();
    let mut tolerances = Tolerances::default();
    for item in &a.tol {
        let (k, v) = key_value(item)?;
        let value: f64 = v.parse().map_err(|_| invalid(format!("tolerance '{item}' is not a number")))?;
        tolerances.set(k, value).map_err(invalid)?;
    }
    config.tolerances = tolerances;
    let (mut kinds, mut families) = (Vec::new(), Vec::new());
    for item in &a.only {
        match key_value(item)? {
            ("check", v) => kinds.push(CheckKind::from_name(v).ok_or_else(|| invalid(format!("unknown check '{v}'")))?),
            ("family", v) => families.push(v.to_string()),
            (k, _) => return Err(invalid(format!("--only accepts check= or family=, got '{k}'"))),
        }
    }
    config.restrict(&kinds, &families);
    if config.checks.is_empty() {
        return Err(invalid("--only selects no checks"));
    }
    let report = verify::run_battery(&config);
    let header = Header::new(invocation, None, None, None);
    let table = format!("{}\n{}", header.comment_line(), report.to_table());
    match (&a.output.out, a.output.format.unwrap_or(Format::Json)) {
        (Some(out), Format::Json) => {
            write_atomic(out, &report.to_json())?;
            print!("{table}");
        }
        (Some(out), Format::Csv) => write_atomic(out, &table)?,
        (None, Format::Json) => emit(None, &report.to_json())?,
        (None, Format::Csv) => emit(None, &table)?,
    }
    if report.success() {
        return Ok(());
    }
    let bad: Vec<String> = report
        .results
        .iter()
        .filter(|r| !r.outcome.is_ok())
        .map(|r| format!("{} defect {:.3e} > {:.3e}", r.check_id, r.measured_defect, r.tolerance))
        .collect();
    Err(Failure::Failed(format!("{} check(s) failed:\n  {}", bad.len(), bad.join("\n  "))))
}

fn cmd_girsanov_demo(a: DemoArgs, invocation: &str) -> Result<(), Failure> {
    let spec = read_spec(&a.spec)?;
    let tol = Tolerances::default();
    let workers = default_workers();
    let h = verify::girsanov_histogram(&spec, a.t, a.n, a.dt, a.bins, a.seed, workers).map_err(invalid)?;
    let se = h.stderr();
    let mut table = Table::new(&["lo", "hi", "weighted", "stderr", "predicted"]);
    for (k, w) in h.edges.windows(2).enumerate() {
        table.push(vec![w[0], w[1], h.weighted[k], se[k], h.predicted[k]]);
    }
    let header = Header::new(invocation, Some(spec), Some(a.seed), Some(a.dt));
    emit_table(&a.output, &table, &header)?;
    let r: CheckResult = verify::check_girsanov_mc(&spec, a.t, a.n, a.dt, a.bins, a.seed, tol.girsanov_level, workers);
    eprintln!(
        "wald statistic {:.4} critical {:.4} ess {:.1}: {}",
        r.measured_defect,
        r.tolerance,
        h.ess,
        serde_json::to_value(r.outcome).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
    );
    match r.outcome {
        Outcome::Fail | Outcome::Error => {
            Err(Failure::Failed("weighted histogram disagrees with the tilde density".into()))
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_subcommand() {
        for args in [
            vec!["x", "density", "--spec", "{}", "--t", "1", "--x-grid", "-5:1:0.01"],
            vec!["x", "simulate", "--spec", "{}", "--t-end", "1", "--paths", "3", "--out", "a.csv"],
            vec!["x", "moments", "--spec", "{}", "--t-grid", "0.1:1:0.1", "--format", "json"],
            vec!["x", "verify", "--only", "check=boundary_flux", "--tol", "normalization=1e-9"],
            vec!["x", "girsanov-demo", "--spec", "{}"],
        ] {
            Cli::try_parse_from(args).unwrap();
        }
    }

    #[test]
    fn bad_input_exits_two() {
        assert_eq!(run_from(["x", "density", "--spec", "{}", "--t", "1", "--x-grid", "0:1:0.1"]), 2);
        assert_eq!(run_from(["x", "nonsense"]), 2);
        assert_eq!(run_from(["x", "verify", "--tol", "bogus=1"]), 2);
    }

    #[test]
    fn path_files_sit_next_to_output() {
        assert_eq!(path_file(Path::new("/d/ens.csv"), 3, Format::Csv), PathBuf::from("/d/ens.path3.csv"));
    }
}
