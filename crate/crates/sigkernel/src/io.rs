//! CSV and JSON file formats.
//!
//! Time series: one time step per row, one dimension per column, optional
//! single header row. Values are written with the shortest representation
//! that parses back to the same `f64`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;
use sigkernel_core::wavefront::KernelGrid;
use sigkernel_core::{GramResult, TimeSeries};

use crate::error::{CliError, Result};

/// Version of every JSON document this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

pub fn load_csv(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| CliError::io(path, e))?;
    parse_csv(&text, path)
}

/// Parses CSV text; `origin` only labels errors. Row and column numbers in
/// errors are 1-based and count the header row.
pub fn parse_csv(text: &str, origin: impl AsRef<Path>) -> Result<TimeSeries> {
    let origin = origin.as_ref();
    let parse_err = |row: usize, column: usize, message: String| CliError::Parse {
        path: origin.to_path_buf(),
        row,
        column,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut dim = None;
    let mut data = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| parse_err(row, 0, e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<Result<f64, usize>> = record
            .iter()
            .enumerate()
            .map(|(c, cell)| cell.parse::<f64>().map_err(|_| c + 1))
            .collect();
        if idx == 0 && parsed.iter().any(Result::is_err) {
            // header
            if parsed.iter().all(Result::is_err) {
                dim = Some(record.len());
                continue;
            }
        }
        let expected = *dim.get_or_insert(record.len());
        if record.len() != expected {
            return Err(parse_err(
                row,
                record.len().min(expected) + 1,
                format!("ragged row: expected {expected} columns, found {}", record.len()),
            ));
        }
        for (c, value) in parsed.into_iter().enumerate() {
            match value {
                Ok(v) if v.is_finite() => data.push(v),
                Ok(v) => return Err(parse_err(row, c + 1, format!("non-finite value {v}"))),
                Err(col) => {
                    return Err(parse_err(
                        row,
                        col,
                        format!("not a number: {:?}", record.get(col - 1).unwrap_or_default()),
                    ))
                }
            }
        }
    }
    let dim = dim.unwrap_or(0);
    if data.is_empty() {
        return Err(CliError::Format {
            path: origin.to_path_buf(),
            message: "no data rows".into(),
        });
    }
    Ok(TimeSeries::from_flat(dim, data)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_rows<'a>(path: &Path, rows: impl Iterator<Item = &'a [f64]>) -> Result<()> {
    let mut out = create(path)?;
    write_rows_to(&mut out, rows).map_err(|e| CliError::io(path, e))?;
    out.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_rows_to<'a>(out: &mut impl Write, rows: impl Iterator<Item = &'a [f64]>) -> std::io::Result<()> {
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn save_csv(ts: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    write_rows(path.as_ref(), ts.points())
}

/// `m` rows of `m` comma-separated values.
pub fn save_gram_csv(gram: &GramResult, path: impl AsRef<Path>) -> Result<()> {
    write_rows(path.as_ref(), gram.values().chunks(gram.size()))
}

/// Kernel values at every knot pair, one row per knot of `x`.
pub fn save_grid_csv(grid: &KernelGrid, path: impl AsRef<Path>) -> Result<()> {
    write_rows(path.as_ref(), grid.values.chunks(grid.len_y))
}

/// Coefficient matrix of one tile, row `i` holding the coefficients of `u^i`.
#[cfg(feature = "diagnostics")]
pub fn save_coeff_csv(coeffs: &sigkernel_core::CoeffMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_rows(path.as_ref(), coeffs.rows())
}

pub fn save_json(value: &impl Serialize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| CliError::Format { path: path.to_path_buf(), message: e.to_string() })?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Serialize)]
pub struct KernelMeta {
    pub schema: u32,
    pub command: &'static str,
    pub value: f64,
    pub order: usize,
    pub order_converged: bool,
    pub len_x: usize,
    pub len_y: usize,
    pub dim: usize,
    pub tiles: usize,
    pub peak_live_series: usize,
}

#[derive(Debug, Serialize)]
pub struct GramMeta {
    pub schema: u32,
    pub command: &'static str,
    pub size: usize,
    pub len: usize,
    pub dim: usize,
    /// Per-entry truncation orders, row-major.
    pub orders: Vec<usize>,
    pub orders_converged: bool,
    pub max_abs_rho: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    pub peak_live_series: usize,
    pub wall_seconds: f64,
    pub values: Vec<Vec<f64>>,
    pub inputs: Vec<String>,
}
