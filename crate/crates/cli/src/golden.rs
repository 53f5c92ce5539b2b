use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::scenario::compute;

/// Layout version of the golden tree; bump when file schemas change.
pub const GOLDEN_FORMAT: &str = "v1";

/// Name of the normalized configuration stored next to each golden set.
pub const GOLDEN_CONFIG: &str = "config.toml";

/// A CSV file as header plus string cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Read a headed CSV file; every row must match the header width.
pub fn read_csv(text: &str) -> Result<CsvTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> =
        reader.headers().map_err(|e| CliError::Csv(e.to_string()))?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(CliError::Csv("missing header".into()));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Csv(e.to_string()))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(CsvTable { header, rows })
}

fn cell_matches(expected: &str, actual: &str, tol: f64) -> bool {
    match (expected.parse::<f64>(), actual.parse::<f64>()) {
        (Ok(a), Ok(b)) if a.is_finite() && b.is_finite() => (a - b).abs() <= tol * a.abs().max(1.0),
        (Ok(a), Ok(b)) => a == b || (a.is_nan() && b.is_nan()),
        _ => expected == actual,
    }
}

/// Cell-wise differences: numbers agree to `tol` (relative above 1, absolute
/// below), everything else exactly. Empty when the tables match.
pub fn compare_tables(expected: &CsvTable, actual: &CsvTable, tol: f64) -> Vec<String> {
    let mut diffs = Vec::new();
    if expected.header != actual.header {
        diffs.push(format!("header differs: {:?} vs {:?}", expected.header, actual.header));
        return diffs;
    }
    if expected.rows.len() != actual.rows.len() {
        diffs.push(format!("{} rows expected, {} found", expected.rows.len(), actual.rows.len()));
    }
    for (i, (e, a)) in expected.rows.iter().zip(&actual.rows).enumerate() {
        for ((col, x), y) in expected.header.iter().zip(e).zip(a) {
            if !cell_matches(x, y, tol) {
                diffs.push(format!("row {}, {col}: expected {x}, got {y}", i + 1));
            }
        }
    }
    diffs
}

/// Directory of golden set `name` under `root`.
pub fn golden_dir(root: &Path, name: &str) -> PathBuf {
    root.join(GOLDEN_FORMAT).join(name)
}

/// Run `config` and store its CSV files, plus the normalized configuration,
/// as golden set `name` under `root`.
///
/// Existing files are only replaced when `overwrite` is set, and a run with
/// failed points is never stored.
pub fn emit_goldens(config: &RunConfig, root: &Path, name: &str, overwrite: bool) -> Result<Vec<PathBuf>> {
    let dir = golden_dir(root, name);
    let out = compute(config)?;
    let mut files: Vec<(String, String)> = out.files;
    files.push((GOLDEN_CONFIG.to_string(), config.to_toml()));
    if !overwrite {
        if let Some((existing, _)) = files.iter().find(|(f, _)| dir.join(f).exists()) {
            return Err(CliError::OverwriteRefused(dir.join(existing)));
        }
    }
    if !out.failures.is_empty() {
        return Err(CliError::Incomplete(out.failures.len()));
    }
    fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    let mut written = Vec::with_capacity(files.len());
    for (f, contents) in files {
        let path = dir.join(f);
        fs::write(&path, contents).map_err(CliError::io(&path))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_and_compares() {
        let a = read_csv("x,y\n1,driven\n2.5,assisted\n").unwrap();
        assert_eq!(a.header, ["x", "y"]);
        assert_eq!(a.rows.len(), 2);
        let b = read_csv("x,y\n1.000000001,driven\n2.5,assisted\n").unwrap();
        assert!(compare_tables(&a, &b, 1e-8).is_empty());
        assert_eq!(compare_tables(&a, &b, 1e-10).len(), 1);
        let c = read_csv("x,y\n1,assisted\n2.5,assisted\n").unwrap();
        assert_eq!(compare_tables(&a, &c, 1.0).len(), 1);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(read_csv("x,y\n1\n").is_err());
        assert!(read_csv("").is_err());
    }

    #[test]
    fn non_finite_cells() {
        assert!(cell_matches("inf", "inf", 1e-8));
        assert!(!cell_matches("inf", "1e300", 1e-8));
        assert!(cell_matches("", "", 1e-8));
    }
}
