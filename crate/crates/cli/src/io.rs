//! CSV sample ingestion and input fingerprinting.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use meancov::SampleSet;

use crate::CliError;

/// Provenance of one loaded input file, carried into reports.
#[derive(Debug, Clone, Serialize)]
pub struct InputMeta {
    pub path: String,
    pub sha256: String,
    pub observations: usize,
    pub variables: usize,
}

/// Loads a sample from a CSV file: rows are observations, columns are
/// variables, comma-delimited UTF-8. A first line whose fields do not all
/// parse as numbers is treated as a header and skipped.
pub fn load_sample(path: &Path, label: &str) -> Result<(SampleSet, InputMeta), CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let digest = hex_digest(&bytes);
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Input(format!("{} is not valid UTF-8", path.display())))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    if let Some((_, first)) = lines.next() {
        match parse_row(first) {
            Ok(row) => rows.push(row),
            Err(_) => {} // header line
        }
    }
    for (lineno, line) in lines {
        let row = parse_row(line).map_err(|col| {
            CliError::Input(format!(
                "{}: line {} field {} is not a number",
                path.display(),
                lineno + 1,
                col + 1
            ))
        })?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(CliError::Input(format!(
                    "{}: line {} has {} fields, expected {}",
                    path.display(),
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let sample = SampleSet::from_rows(&rows, label).map_err(CliError::from)?;
    let meta = InputMeta {
        path: path.display().to_string(),
        sha256: digest,
        observations: sample.n_observations(),
        variables: sample.dim(),
    };
    Ok((sample, meta))
}

fn parse_row(line: &str) -> Result<Vec<f64>, usize> {
    line.split(',')
        .enumerate()
        .map(|(i, tok)| tok.trim().parse::<f64>().map_err(|_| i))
        .collect()
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}
