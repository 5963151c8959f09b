//! Sample-file ingestion.
//!
//! Plain files hold one number per line; blank lines and lines starting with
//! `#` are skipped. With a column selector the file is read as CSV with a
//! header row. NaN and infinite values are rejected with their line number.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use quantune::SampleSet;

use crate::error::CliError;

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse_value(text: &str, path: &Path, line: u64) -> Result<f64, CliError> {
    let value: f64 = text
        .parse()
        .map_err(|_| CliError::Data(format!("{}: line {line}: cannot parse {text:?} as a number", path.display())))?;
    if !value.is_finite() {
        return Err(CliError::Data(format!(
            "{}: line {line}: non-finite value {text:?} rejected",
            path.display()
        )));
    }
    Ok(value)
}

fn finish(values: Vec<f64>, path: &Path) -> Result<SampleSet, CliError> {
    if values.is_empty() {
        return Err(CliError::Data(format!("{}: file contains no samples", path.display())));
    }
    Ok(SampleSet::new(values)?)
}

/// Reads a sample file; `column` selects a CSV column by header name or
/// 0-based position.
pub fn load_samples(path: &Path, column: Option<&str>) -> Result<SampleSet, CliError> {
    match column {
        None => load_lines(path),
        Some(col) => load_csv_column(path, col),
    }
}

fn load_lines(path: &Path) -> Result<SampleSet, CliError> {
    let reader = BufReader::new(open(path)?);
    let mut values = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        values.push(parse_value(text, path, i as u64 + 1)?);
    }
    finish(values, path)
}

fn load_csv_column(path: &Path, column: &str) -> Result<SampleSet, CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let headers = reader.headers()?.clone();
    let index = match headers.iter().position(|h| h == column) {
        Some(i) => i,
        None => column
            .parse::<usize>()
            .ok()
            .filter(|&i| i < headers.len())
            .ok_or_else(|| CliError::Usage(format!("{}: no column {column:?} in header", path.display())))?,
    };
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = record
            .get(index)
            .ok_or_else(|| CliError::Data(format!("{}: line {line}: missing column {column:?}", path.display())))?;
        values.push(parse_value(field, path, line)?);
    }
    finish(values, path)
}

/// One value per line in shortest round-trip form.
pub fn write_values(values: &[f64], out: &mut dyn Write) -> Result<(), CliError> {
    let mut out = std::io::BufWriter::new(out);
    for v in values {
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    Ok(())
}
