//! File formats: grids, headers, CSV/JSON tables and atomic writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use entrance_core::ProcessSpec;
use serde::Serialize;
use thiserror::Error;

use crate::ARTIFACT_VERSION;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("bad grid '{0}': {1}")]
    Grid(String, &'static str),
    #[error("bad spec: {0}")]
    Spec(String),
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

/// Parse `lo:hi:step`: `lo, lo+step, …` up to but excluding `hi`.
///
/// Points are `lo + k·step`, not a running sum.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, IoError> {
    let err = |why| IoError::Grid(text.to_string(), why);
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(err("expected lo:hi:step"));
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err("not a number"));
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
        return Err(err("values must be finite"));
    }
    if step <= 0.0 {
        return Err(err("step must be positive"));
    }
    let mut n = ((hi - lo) / step).ceil();
    if n > 1e8 {
        return Err(err("grid has more than 1e8 points"));
    }
    // a point within rounding of hi counts as hi and is dropped
    while n >= 1.0 && lo + (n - 1.0) * step >= hi - 1e-9 * step {
        n -= 1.0;
    }
    if !(n >= 1.0) {
        return Err(err("grid is empty"));
    }
    Ok((0..n as usize).map(|k| lo + k as f64 * step).collect())
}

/// Read a spec given inline as JSON or as `@path`.
pub fn read_spec(arg: &str) -> Result<ProcessSpec, IoError> {
    let text = match arg.strip_prefix('@') {
        Some(path) => {
            std::fs::read_to_string(path).map_err(|source| IoError::Read { path: path.to_string(), source })?
        }
        None => arg.to_string(),
    };
    let spec: ProcessSpec = serde_json::from_str(&text).map_err(|e| IoError::Spec(e.to_string()))?;
    spec.validate().map_err(|e| IoError::Spec(e.to_string()))
}

pub fn spec_json(spec: &ProcessSpec) -> String {
    serde_json::to_string(spec).expect("specs always serialize")
}

/// 17 significant digits; parsing the text gives back the same bits.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

/// Provenance recorded at the top of every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub version: &'static str,
    pub command: String,
    pub spec: Option<ProcessSpec>,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
}

impl Header {
    pub fn new(command: &str, spec: Option<ProcessSpec>, seed: Option<u64>, dt: Option<f64>) -> Self {
        Header { version: ARTIFACT_VERSION, command: command.to_string(), spec, seed, dt }
    }

    pub fn comment_line(&self) -> String {
        let mut s = format!("# entrance-diffusions {} {}", self.version, self.command);
        if let Some(spec) = &self.spec {
            let _ = write!(s, " spec={}", spec_json(spec));
        }
        if let Some(seed) = self.seed {
            let _ = write!(s, " seed={seed}");
        }
        if let Some(dt) = self.dt {
            let _ = write!(s, " dt={}", fmt_num(dt));
        }
        s
    }
}

/// Column-oriented numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Optional text column appended after the numbers.
    pub tags: Option<(String, Vec<String>)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), tags: None }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, header: &Header) -> String {
        let mut out = header.comment_line();
        out.push('\n');
        out.push_str(&self.columns.join(","));
        if let Some((name, _)) = &self.tags {
            let _ = write!(out, ",{name}");
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|&v| fmt_num(v)).collect();
            out.push_str(&cells.join(","));
            if let Some((_, tags)) = &self.tags {
                let _ = write!(out, ",{}", tags[i]);
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, header: &Header) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            header: &'a Header,
            columns: Vec<&'a str>,
            rows: Vec<Vec<serde_json::Value>>,
        }
        let num = |v: f64| serde_json::Number::from_f64(v).map_or(serde_json::Value::Null, serde_json::Value::Number);
        let mut columns: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        if let Some((name, _)) = &self.tags {
            columns.push(name);
        }
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut cells: Vec<serde_json::Value> = r.iter().map(|&v| num(v)).collect();
                if let Some((_, tags)) = &self.tags {
                    cells.push(serde_json::Value::String(tags[i].clone()));
                }
                cells
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&Doc { header, columns, rows }).expect("tables serialize");
        s.push('\n');
        s
    }
}

/// Parse CSV written by [`Table::to_csv`] (numeric columns only).
pub fn parse_csv(text: &str) -> Result<Table, IoError> {
    let bad = |why| IoError::Grid("csv".into(), why);
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let columns: Vec<String> = lines.next().ok_or(bad("missing column line"))?.split(',').map(String::from).collect();
    let mut rows = Vec::new();
    for line in lines {
        let row = line
            .split(',')
            .map(|c| c.parse::<f64>().map_err(|_| bad("non-numeric cell")))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != columns.len() {
            return Err(bad("ragged row"));
        }
        rows.push(row);
    }
    Ok(Table { columns, rows, tags: None })
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), IoError> {
    let wrap = |source| IoError::Write { path: path.display().to_string(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(contents.as_bytes()).map_err(wrap)?;
    tmp.as_file().sync_all().map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rules() {
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75]);
        assert_eq!(parse_grid("-5:1:0.01").unwrap().len(), 600);
        assert_eq!(parse_grid("0:1:0.3").unwrap().len(), 4);
        assert!(parse_grid("1:1:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("a:1:0.1").is_err());
    }

    #[test]
    fn spec_json_rejects_unknown_keys() {
        assert!(read_spec(r#"{"family":"taboo_i","a":1}"#).is_ok());
        assert!(read_spec(r#"{"family":"taboo_i","a":1,"b":2}"#).is_err());
        assert!(read_spec(r#"{"family":"line_ab_star","alpha":0.5,"beta":1}"#).is_err());
        let spec = read_spec(r#"{"family":"excursion_e","x0":0.3,"x_end":0.7,"horizon":1}"#).unwrap();
        assert_eq!(read_spec(&spec_json(&spec)).unwrap(), spec);
    }

    #[test]
    fn csv_round_trip_is_idempotent() {
        let mut t = Table::new(&["x", "y"]);
        t.push(vec![0.1, 1.0 / 3.0]);
        t.push(vec![-2.5e-300, f64::MAX]);
        let h = Header::new("test", None, Some(1), Some(1e-3));
        let text = t.to_csv(&h);
        let back = parse_csv(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_csv(&h), text);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, "a").unwrap();
        write_atomic(&p, "b").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "b");
    }
}
