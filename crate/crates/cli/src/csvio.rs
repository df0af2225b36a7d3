//! Loss and confidence matrices as CSV: a header `expert_1,…,expert_K`
//! followed by one row per round.

use std::fs::File;
use std::path::Path;

use excess_agg::{ConfidenceVector, LossVector};

use crate::error::CliError;

pub fn header(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("expert_{i}")).collect()
}

fn file_err(path: &Path, message: impl Into<String>) -> CliError {
    CliError::File {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn row_err(path: &Path, row: usize, message: impl Into<String>) -> CliError {
    CliError::Row {
        path: path.display().to_string(),
        row,
        message: message.into(),
    }
}

/// Reads a rectangular matrix of finite numbers, checking the header and
/// the width of every row.
pub fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let file = File::open(path).map_err(|e| file_err(path, e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let head = reader
        .headers()
        .map_err(|e| file_err(path, e.to_string()))?
        .clone();
    if head.is_empty() || (head.len() == 1 && head[0].is_empty()) {
        return Err(file_err(path, "missing header row"));
    }
    let k = head.len();
    for (i, (got, want)) in head.iter().zip(header(k)).enumerate() {
        if got != want {
            return Err(file_err(
                path,
                format!("header column {} is {got:?}, expected {want:?}", i + 1),
            ));
        }
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| row_err(path, row, e.to_string()))?;
        if record.len() != k {
            return Err(row_err(
                path,
                row,
                format!("expected {k} columns, found {}", record.len()),
            ));
        }
        let mut values = Vec::with_capacity(k);
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                row_err(path, row, format!("expert_{}: cannot parse {field:?} as a number", j + 1))
            })?;
            if !v.is_finite() {
                return Err(row_err(path, row, format!("expert_{}: value {v} is not finite", j + 1)));
            }
            values.push(v);
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(file_err(path, "no data rows"));
    }
    Ok(rows)
}

/// Losses declared to lie in `range`, rescaled to `[0, 1]`.
pub fn read_losses(path: &Path, range: (f64, f64)) -> Result<Vec<LossVector>, CliError> {
    read_matrix(path)?
        .into_iter()
        .enumerate()
        .map(|(i, raw)| {
            LossVector::from_raw(raw, range).map_err(|e| row_err(path, i + 1, e.to_string()))
        })
        .collect()
}

pub fn read_confidences(path: &Path) -> Result<Vec<ConfidenceVector>, CliError> {
    read_matrix(path)?
        .into_iter()
        .enumerate()
        .map(|(i, c)| ConfidenceVector::new(c).map_err(|e| row_err(path, i + 1, e.to_string())))
        .collect()
}

/// Writes rows under the `expert_k` header. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_matrix<'a>(
    path: &Path,
    k: usize,
    rows: impl IntoIterator<Item = &'a [f64]>,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| file_err(path, e.to_string()))?;
    w.write_record(header(k))
        .map_err(|e| file_err(path, e.to_string()))?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| file_err(path, e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
