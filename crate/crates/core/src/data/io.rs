use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::norm::NormRecord;
use crate::error::{Error, Result};

/// Parses whitespace-separated rows of exactly `samples_per_row` numbers
/// (the HAR inertial-signal layout uses 128). Blank lines are skipped.
pub fn parse_windowed_text(text: &str, samples_per_row: usize) -> Result<Vec<Vec<f64>>> {
    if samples_per_row == 0 {
        return Err(Error::Config("samples_per_row must be ≥ 1".into()));
    }
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| parse_number(tok, line_no))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != samples_per_row {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {samples_per_row} values, found {}", row.len()),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("no rows in windowed text".into()));
    }
    Ok(rows)
}

pub fn load_windowed_text(path: &Path, samples_per_row: usize) -> Result<Vec<Vec<f64>>> {
    parse_windowed_text(&fs::read_to_string(path)?, samples_per_row)
}

/// One value per non-blank line.
pub fn parse_column(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let mut toks = t.split_whitespace();
        let v = parse_number(toks.next().expect("non-empty"), i + 1)?;
        if toks.next().is_some() {
            return Err(Error::Parse {
                line: i + 1,
                message: "expected a single value per line".into(),
            });
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput("column file has no values".into()));
    }
    Ok(out)
}

pub fn load_column(path: &Path) -> Result<Vec<f64>> {
    parse_column(&fs::read_to_string(path)?)
}

fn parse_number(tok: &str, line: usize) -> Result<f64> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            message: format!("invalid number '{tok}'"),
        }),
    }
}

/// Writes one value per line using the shortest exact decimal form.
pub fn write_column(path: &Path, values: &[f64]) -> Result<()> {
    let mut s = String::with_capacity(values.len() * 20);
    for v in values {
        s.push_str(&format!("{v:?}\n"));
    }
    let mut f = fs::File::create(path)?;
    f.write_all(s.as_bytes())?;
    Ok(())
}

/// Sidecar document describing a generated trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub channel: String,
    pub sample_rate_hz: f64,
    pub length: usize,
    pub seed: u64,
    pub normalization: NormRecord,
}

pub fn write_metadata(path: &Path, meta: &TraceMetadata) -> Result<()> {
    let json = serde_json::to_string_pretty(meta).expect("metadata serializes");
    fs::write(path, json + "\n")?;
    Ok(())
}

pub fn read_metadata(path: &Path) -> Result<TraceMetadata> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}
