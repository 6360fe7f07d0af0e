use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Reads a headerless CSV of numbers, one matrix row per record.
pub fn read_dense_csv(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_path(path)?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        if cols.is_some_and(|c| c != record.len()) {
            return Err(Error::Parse { line, msg: format!("expected {} fields, found {}", cols.unwrap(), record.len()) });
        }
        cols = Some(record.len());
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse { line, msg: format!("`{field}` is not a number") })?;
            if !v.is_finite() {
                return Err(Error::Parse { line, msg: format!("`{field}` is not finite") });
            }
            data.push(v);
        }
        rows += 1;
    }
    DenseMatrix::new(rows, cols.unwrap_or(0), data)
}

/// Writes one record per row with 17 significant digits.
pub fn write_dense_csv(path: impl AsRef<Path>, x: &DenseMatrix) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for i in 0..x.rows() {
        writer.write_record(x.row(i).iter().map(|v| format!("{v:.16e}")))?;
    }
    writer.flush()?;
    Ok(())
}
