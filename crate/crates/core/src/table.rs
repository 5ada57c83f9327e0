//! Small helpers shared by every CSV reader and writer in the crate.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Token written for values that are explicitly undefined (never a number).
pub const UNDEFINED: &str = "undefined";

/// Fixed-point rendering with 6 fractional digits.
///
/// Rust's float formatting rounds the exact binary value and sends exact ties
/// to even, so this is round-half-even. Negative zero is printed as zero.
pub fn fmt6(value: f64) -> String {
    let s = format!("{value:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

pub fn fmt6_opt(value: Option<f64>) -> String {
    value.map_or_else(|| UNDEFINED.to_string(), fmt6)
}

/// Rounds to the value that `fmt6` prints, so that in-memory values match what a
/// reader gets back from disk.
pub fn quantize6(value: f64) -> f64 {
    fmt6(value).parse().expect("fmt6 output always parses")
}

pub(crate) fn open_csv(path: &Path, header: &[&str]) -> Result<csv::Reader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));
    let found = reader
        .headers()
        .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::format(
            path.display().to_string(),
            format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(reader)
}

pub(crate) fn records(
    path: &Path,
    header: &[&str],
) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut reader = open_csv(path, header)?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
        if rec.len() != header.len() {
            return Err(Error::format(
                location(path, i + 2),
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        out.push((i + 2, rec));
    }
    Ok(out)
}

pub(crate) fn location(path: &Path, line: usize) -> String {
    format!("{}:{line}", path.display())
}

pub(crate) fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    name: &str,
    raw: &str,
) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::format(location(path, line), format!("bad {name} `{raw}`")))
}

pub(crate) fn parse_opt_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    name: &str,
    raw: &str,
) -> Result<Option<T>> {
    if raw.trim().is_empty() {
        Ok(None)
    } else {
        parse_field(path, line, name, raw).map(Some)
    }
}

/// Parses a float that may be the `undefined` token.
pub(crate) fn parse_opt_f64(path: &Path, line: usize, name: &str, raw: &str) -> Result<Option<f64>> {
    if raw.trim() == UNDEFINED {
        Ok(None)
    } else {
        parse_field(path, line, name, raw).map(Some)
    }
}

/// Writes `rows` under `header`, creating parent directories as needed.
pub(crate) fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e.to_string()));
    writer.write_record(header).map_err(csv_err)?;
    for row in rows {
        writer.write_record(row).map_err(csv_err)?;
    }
    let mut inner = writer
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    inner.flush().map_err(|e| Error::io(path, e))
}
