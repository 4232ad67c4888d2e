//! CSV ingestion and egress for matrices.
//!
//! The format is plain comma-separated numbers, one matrix row per
//! line, no quoting. Output uses the shortest decimal form that parses
//! back to the identical double, so save -> load is bit-stable.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{NmfError, Result};
use crate::matrix::{Matrix, NonNegMatrix};

/// Parses a rectangular numeric CSV into a non-negative matrix.
///
/// `skip_header` drops the first line. Ragged rows, unparseable cells
/// and negative values are reported with their coordinates (row
/// indices count data rows, after any header).
pub fn load_csv(path: &Path, skip_header: bool) -> Result<NonNegMatrix> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text, skip_header)
}

pub fn parse_csv(text: &str, skip_header: bool) -> Result<NonNegMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut expected_cols = None;
    for (row_idx, line) in text
        .lines()
        .skip(usize::from(skip_header))
        .filter(|l| !l.trim().is_empty())
        .enumerate()
    {
        let mut row = Vec::new();
        for (col_idx, cell) in line.split(',').enumerate() {
            let trimmed = cell.trim();
            let value: f64 = trimmed.parse().map_err(|_| NmfError::CsvBadCell {
                row: row_idx,
                col: col_idx,
                cell: trimmed.to_string(),
            })?;
            if !value.is_finite() {
                return Err(NmfError::NonFiniteEntry {
                    row: row_idx,
                    col: col_idx,
                });
            }
            if value < 0.0 {
                return Err(NmfError::NegativeEntry {
                    row: row_idx,
                    col: col_idx,
                    value,
                });
            }
            row.push(value);
        }
        match expected_cols {
            None => expected_cols = Some(row.len()),
            Some(expected) if expected != row.len() => {
                return Err(NmfError::CsvRagged {
                    row: row_idx,
                    expected,
                    got: row.len(),
                });
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(NmfError::degenerate("csv contains no data rows".to_string()));
    }
    NonNegMatrix::from_rows(&rows)
}

/// Writes a matrix as CSV, one row per line, values in shortest
/// round-trip decimal form.
pub fn save_csv(m: &Matrix, path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    write_csv(m, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_csv<W: Write>(m: &Matrix, out: &mut W) -> std::io::Result<()> {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                out.write_all(b",")?;
            }
            write!(out, "{}", m.get(i, j))?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}
