//! Tabular report files.
//!
//! CSV floats use 17 significant digits so every value parses back to the
//! same double. Each CSV ends with a `#` footer: the fit line, warnings, and
//! the configuration echo.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Format;
use crate::error::{Error, Result};
use crate::experiments::{ExperimentReport, LowerBoundReport};

/// Lossless decimal form of a double; `nan`, `inf`, `-inf` for non-finite values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub(crate) fn fmt_opt_short(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{v:.4}"))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), fmt_f64)
}

fn footer(out: &mut String, fit: [Option<f64>; 3], seed: Option<u64>, warnings: &[String], config: &BTreeMap<String, String>) {
    let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    let _ = writeln!(
        out,
        "# order={} intercept={} r2={} seed={seed}",
        fmt_opt(fit[0]),
        fmt_opt(fit[1]),
        fmt_opt(fit[2])
    );
    for w in warnings {
        let _ = writeln!(out, "# warning: {}", w.replace('\n', " "));
    }
    for (k, v) in config {
        let _ = writeln!(out, "# config {k}={v}");
    }
}

pub fn experiment_csv(r: &ExperimentReport) -> String {
    let mut out = String::from("N,h,estimate,std_error,samples\n");
    for p in &r.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.n,
            fmt_f64(p.h),
            fmt_f64(p.estimate),
            fmt_f64(p.std_error),
            p.samples
        );
    }
    footer(&mut out, [r.fitted_order, r.fit_intercept, r.fit_r2], Some(r.seed), &r.warnings, &r.config);
    out
}

pub fn lower_bound_csv(r: &LowerBoundReport) -> String {
    let mut out = String::from("h,exact_gap,lower_bound\n");
    for row in &r.rows {
        let _ = writeln!(out, "{},{},{}", fmt_f64(row.h), fmt_f64(row.exact_gap), fmt_f64(row.lower_bound));
    }
    footer(&mut out, [r.fitted_order, r.fit_intercept, r.fit_r2], None, &r.warnings, &r.config);
    out
}

/// One Monte Carlo mean compared against its closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub quantity: String,
    pub estimate: f64,
    pub std_error: f64,
    pub exact: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub rows: Vec<OracleRow>,
    pub pass: bool,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
}

pub fn oracle_csv(r: &OracleReport) -> String {
    let mut out = String::from("N,quantity,estimate,std_error,exact,pass\n");
    for row in &r.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.n,
            row.quantity,
            fmt_f64(row.estimate),
            fmt_f64(row.std_error),
            fmt_f64(row.exact),
            row.pass
        );
    }
    footer(&mut out, [None; 3], Some(r.seed), &[], &r.config);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRow {
    pub seed: u64,
    pub distance: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub lhs: f64,
    pub lhs_std_error: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub rows: Vec<PerturbationRow>,
    pub pass: bool,
    pub config: BTreeMap<String, String>,
}

pub fn perturbation_csv(r: &PerturbationReport) -> String {
    let mut out = String::from("seed,distance,N,lhs,lhs_std_error,rhs,margin,pass\n");
    for row in &r.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.seed,
            fmt_f64(row.distance),
            row.n,
            fmt_f64(row.lhs),
            fmt_f64(row.lhs_std_error),
            fmt_f64(row.rhs),
            fmt_f64(row.margin),
            row.pass
        );
    }
    footer(&mut out, [None; 3], None, &[], &r.config);
    out
}

/// A simulated path: `states[k]` is the state at `times[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub h: f64,
    pub seed: u64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub config: BTreeMap<String, String>,
}

pub fn path_csv(r: &PathReport) -> String {
    let modes = r.states.first().map_or(0, Vec::len);
    let mut out = String::from("step,t");
    for i in 0..modes {
        let _ = write!(out, ",c{i}");
    }
    out.push('\n');
    for (k, (t, s)) in r.times.iter().zip(&r.states).enumerate() {
        let _ = write!(out, "{k},{}", fmt_f64(*t));
        for v in s {
            let _ = write!(out, ",{}", fmt_f64(*v));
        }
        out.push('\n');
    }
    footer(&mut out, [None; 3], Some(r.seed), &[], &r.config);
    out
}

/// Serialize `value` as pretty JSON or with `csv`, and write it to `path`.
pub fn write_report<T: Serialize>(path: &Path, format: Format, value: &T, csv: impl Fn(&T) -> String) -> Result<()> {
    let text = match format {
        Format::Csv => csv(value),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Serialization(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    std::fs::write(path, text)?;
    Ok(())
}

/// Write an [`ExperimentReport`] in the requested format.
pub fn emit_report(report: &ExperimentReport, format: Format, path: &Path) -> Result<()> {
    write_report(path, format, report, experiment_csv)
}

pub fn read_json_report<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Serialization(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ErrorPoint;
    use proptest::prelude::*;

    fn sample_report() -> ExperimentReport {
        let pts = [8usize, 16, 32]
            .iter()
            .map(|&n| ErrorPoint {
                n,
                h: 1.0 / n as f64,
                estimate: 0.1 / (n as f64).sqrt() + 1e-17,
                std_error: 1e-4 / 3.0,
                samples: 1000,
            })
            .collect();
        let mut cfg = BTreeMap::new();
        cfg.insert("mc.seed".into(), "9".into());
        ExperimentReport::from_points("weak-rate", pts, 9).with_config(cfg)
    }

    #[test]
    fn empty_report_has_header_and_nan_footer() {
        let r = ExperimentReport::from_points("weak-rate", vec![], 3);
        let csv = experiment_csv(&r);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("N,h,estimate,std_error,samples"));
        assert_eq!(lines.next(), Some("# order=nan intercept=nan r2=nan seed=3"));
    }

    #[test]
    fn csv_values_round_trip() {
        let r = sample_report();
        let csv = experiment_csv(&r);
        let rows: Vec<&str> = csv.lines().skip(1).take_while(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 3);
        for (line, p) in rows.iter().zip(&r.points) {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f[0].parse::<usize>().unwrap(), p.n);
            assert_eq!(f[1].parse::<f64>().unwrap().to_bits(), p.h.to_bits());
            assert_eq!(f[2].parse::<f64>().unwrap().to_bits(), p.estimate.to_bits());
            assert_eq!(f[3].parse::<f64>().unwrap().to_bits(), p.std_error.to_bits());
        }
        assert!(csv.contains("# config mc.seed=9"));
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let r = sample_report();
        emit_report(&r, Format::Json, &path).unwrap();
        let back: ExperimentReport = read_json_report(&path).unwrap();
        assert_eq!(back, r);
        let empty = ExperimentReport::from_points("strong-rate", vec![], 0);
        emit_report(&empty, Format::Json, &path).unwrap();
        assert_eq!(read_json_report::<ExperimentReport>(&path).unwrap(), empty);
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let r = sample_report();
        let e = emit_report(&r, Format::Csv, Path::new("/nonexistent-dir/x/r.csv")).unwrap_err();
        assert!(matches!(e, Error::Io(_)));
    }

    proptest! {
        #[test]
        fn seventeen_digits_are_lossless(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
