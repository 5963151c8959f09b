//! Report envelope and its JSON and CSV serializations.
//!
//! JSON is the fidelity format: every payload round-trips exactly and keys
//! keep a fixed order. CSV is a flat view; a validation report becomes one
//! row per trial plus a separate histogram table.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use quantune::{Band, RationalLevel, SampleSizeResult, ThresholdEstimate, ValidationReport};
use serde::{Deserialize, Serialize};

use crate::cli::Format;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub schema_version: u32,
    pub tool_version: String,
    pub timestamp: String,
    pub command: String,
    pub inputs: serde_json::Value,
    pub payload: Payload,
}

impl ReportEnvelope {
    pub fn new(command: &str, inputs: serde_json::Value, payload: Payload) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            command: command.to_owned(),
            inputs,
            payload,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "kebab-case")]
pub enum Payload {
    SampleSize(Vec<SampleSizeResult>),
    Estimate(ThresholdEstimate),
    Validation(Box<ValidationReport>),
    Coverage(CoverageValue),
    Sweep(Vec<SweepEntry>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageValue {
    pub m: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub gamma: RationalLevel,
    pub epsilon: f64,
    pub coverage: f64,
}

/// One level of a sweep; exactly one of `report` and `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub gamma: RationalLevel,
    pub report: Option<ValidationReport>,
    pub error: Option<String>,
}

fn create(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes `envelope` to `path`, or to `stdout` when `path` is `None`.
/// Returns the files written.
pub fn write_report(
    envelope: &ReportEnvelope,
    path: Option<&Path>,
    format: Format,
    stdout: &mut dyn Write,
) -> Result<Vec<PathBuf>, CliError> {
    match (format, path) {
        (Format::Json, None) => {
            write_json(envelope, stdout)?;
            Ok(Vec::new())
        }
        (Format::Json, Some(p)) => {
            write_json(envelope, &mut create(p)?)?;
            Ok(vec![p.to_owned()])
        }
        (Format::Csv, None) => {
            write_csv(&envelope.payload, stdout, None)?;
            Ok(Vec::new())
        }
        (Format::Csv, Some(p)) => {
            let mut written = vec![p.to_owned()];
            let side = histogram_path(p);
            let mut main = create(p)?;
            if let Payload::Validation(_) = envelope.payload {
                let mut hist = create(&side)?;
                write_csv(&envelope.payload, &mut main, Some(&mut hist))?;
                written.push(side);
            } else {
                write_csv(&envelope.payload, &mut main, None)?;
            }
            Ok(written)
        }
    }
}

/// `report.csv` -> `report.histogram.csv`.
pub fn histogram_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.histogram.csv"))
}

pub fn write_json(envelope: &ReportEnvelope, out: &mut dyn Write) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, envelope)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<ReportEnvelope, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

fn table(out: &mut dyn Write, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn trial_rows(r: &ValidationReport) -> Vec<Vec<String>> {
    let band: Band = r.band;
    r.thresholds
        .iter()
        .zip(&r.empirical_fars)
        .enumerate()
        .map(|(i, (t, f))| vec![i.to_string(), t.to_string(), f.to_string(), band.contains(*f).to_string()])
        .collect()
}

fn histogram_rows(r: &ValidationReport) -> Vec<Vec<String>> {
    let h = &r.histogram;
    h.counts
        .iter()
        .enumerate()
        .map(|(i, c)| vec![h.edges[i].to_string(), h.edges[i + 1].to_string(), c.to_string()])
        .collect()
}

/// Flat CSV view. The histogram of a validation report goes to `histogram`
/// when given, else after a blank line on `out`.
pub fn write_csv(payload: &Payload, out: &mut dyn Write, histogram: Option<&mut dyn Write>) -> Result<(), CliError> {
    match payload {
        Payload::SampleSize(results) => table(
            out,
            &["method", "n_samples", "k", "lower_index", "upper_index", "symmetry_mapped", "epsilon_warning"],
            results
                .iter()
                .map(|r| {
                    vec![
                        r.method.to_string(),
                        r.n_samples.to_string(),
                        r.k.to_string(),
                        r.estimator_rule.lower_index.to_string(),
                        r.estimator_rule.upper_index.to_string(),
                        r.estimator_rule.symmetry_mapped.to_string(),
                        r.epsilon_warning.to_string(),
                    ]
                })
                .collect(),
        ),
        Payload::Estimate(e) => table(
            out,
            &["value", "lower_index", "upper_index", "beta_weight", "n_samples", "gamma"],
            vec![vec![
                e.value.to_string(),
                e.lower_index.to_string(),
                e.upper_index.to_string(),
                e.beta_weight.to_string(),
                e.n_samples.to_string(),
                e.gamma.to_string(),
            ]],
        ),
        Payload::Coverage(c) => table(
            out,
            &["m", "N", "gamma", "epsilon", "coverage"],
            vec![vec![
                c.m.to_string(),
                c.n.to_string(),
                c.gamma.to_string(),
                c.epsilon.to_string(),
                c.coverage.to_string(),
            ]],
        ),
        Payload::Validation(r) => {
            table(out, &["trial", "threshold", "empirical_far", "inside_band"], trial_rows(r))?;
            let header = ["bin_lower", "bin_upper", "count"];
            match histogram {
                Some(h) => table(h, &header, histogram_rows(r)),
                None => {
                    writeln!(out)?;
                    table(out, &header, histogram_rows(r))
                }
            }
        }
        Payload::Sweep(entries) => table(
            out,
            &["gamma", "n_samples", "fraction_outside", "min", "q1", "median", "q3", "max", "mean", "error"],
            entries
                .iter()
                .map(|e| {
                    let r = e.report.as_ref();
                    let s = r.map(|r| r.summary);
                    vec![
                        e.gamma.to_string(),
                        opt(r.map(|r| r.metadata.n_samples)),
                        opt(r.map(|r| r.fraction_outside)),
                        opt(s.map(|s| s.min)),
                        opt(s.map(|s| s.q1)),
                        opt(s.map(|s| s.median)),
                        opt(s.map(|s| s.q3)),
                        opt(s.map(|s| s.max)),
                        opt(s.map(|s| s.mean)),
                        e.error.clone().unwrap_or_default(),
                    ]
                })
                .collect(),
        ),
    }
}
