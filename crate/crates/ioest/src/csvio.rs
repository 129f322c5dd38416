//! CSV interchange for datasets and reports.
//!
//! Datasets use the header `u_1,..,u_m,y_1,..,y_d`, one observation per row,
//! every float printed with 17 significant digits so a write/read round trip
//! reproduces the in-memory values exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::risk::Dataset;

/// Render one float with 17 significant digits (round-trip exact for f64).
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a dataset; deterministic byte-for-byte given equal data.
pub fn write_dataset(data: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    let m = data.input_dim();
    let d = data.decision_dim();
    let mut header = Vec::with_capacity(m + d);
    header.extend((1..=m).map(|k| format!("u_{k}")));
    header.extend((1..=d).map(|k| format!("y_{k}")));
    writeln!(out, "{}", header.join(","))?;
    for i in 0..data.n() {
        let (u, y) = data.obs(i);
        let row: Vec<String> = u.iter().chain(y).map(|&v| format_f64(v)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Read a dataset, inferring `(m, d)` from the header.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::SchemaMismatch("empty csv".into()))??;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let m = columns.iter().take_while(|c| c.starts_with("u_")).count();
    let d = columns.len() - m;
    if m == 0 || d == 0 || !columns[m..].iter().all(|c| c.starts_with("y_")) {
        return Err(Error::SchemaMismatch(format!(
            "expected header u_1..u_m,y_1..y_d, got `{header}`"
        )));
    }
    let mut us = Vec::new();
    let mut ys = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != m + d {
            return Err(Error::SchemaMismatch(format!(
                "row {}: expected {} fields, got {}",
                lineno + 2,
                m + d,
                fields.len()
            )));
        }
        let mut values = Vec::with_capacity(m + d);
        for field in fields {
            values.push(field.trim().parse::<f64>().map_err(|e| {
                Error::SchemaMismatch(format!("row {}: {e}", lineno + 2))
            })?);
        }
        us.push(values[..m].to_vec());
        ys.push(values[m..].to_vec());
    }
    Dataset::new(us, ys)
}
