use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::operators::IndexSet;

/// Contents of a Matrix Market file.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixMarket {
    /// Sparse entries, 0-based and sorted into [`IndexSet`] order. `pattern`
    /// files carry value 1 for every entry.
    Coordinate { rows: usize, cols: usize, omega: IndexSet, values: Vec<f64> },
    Array(DenseMatrix),
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse().map_err(|_| parse_err(line, format!("{what} `{tok}` is not a nonnegative integer")))
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| parse_err(line, format!("value `{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("value `{tok}` is not finite")));
    }
    Ok(v)
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<MatrixMarket> {
    parse_matrix_market(&fs::read_to_string(path)?)
}

/// Parses `coordinate real|integer|pattern general` and `array real|integer
/// general` documents. Errors carry 1-based line numbers.
pub fn parse_matrix_market(text: &str) -> Result<MatrixMarket> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let head: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if head.len() != 5 || head[0] != "%%matrixmarket" || head[1] != "matrix" {
        return Err(parse_err(1, "expected `%%MatrixMarket matrix <format> <field> general`"));
    }
    let coordinate = match head[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(parse_err(1, format!("unknown format `{other}`"))),
    };
    let pattern = match head[3].as_str() {
        "real" | "integer" => false,
        "pattern" if coordinate => true,
        other => return Err(parse_err(1, format!("unsupported field `{other}`"))),
    };
    if head[4] != "general" {
        return Err(parse_err(1, format!("unsupported symmetry `{}`", head[4])));
    }

    let mut body = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (size_line, size) = body.next().ok_or_else(|| parse_err(2, "missing size line"))?;
    let dims: Vec<&str> = size.split_whitespace().collect();
    let expected = if coordinate { 3 } else { 2 };
    if dims.len() != expected {
        return Err(parse_err(size_line, format!("size line needs {expected} integers")));
    }
    let rows = parse_usize(dims[0], size_line, "row count")?;
    let cols = parse_usize(dims[1], size_line, "column count")?;

    if !coordinate {
        let mut data = Vec::with_capacity(rows * cols);
        let mut last = size_line;
        for (line, l) in body {
            last = line;
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != 1 {
                return Err(parse_err(line, "array entries hold one value per line"));
            }
            if data.len() == rows * cols {
                return Err(parse_err(line, format!("more than {} values", rows * cols)));
            }
            data.push(parse_f64(toks[0], line)?);
        }
        if data.len() != rows * cols {
            return Err(parse_err(last, format!("expected {} values, found {}", rows * cols, data.len())));
        }
        return Ok(MatrixMarket::Array(DenseMatrix::from_col_major(rows, cols, &data)));
    }

    let nnz = parse_usize(dims[2], size_line, "entry count")?;
    let mut seen: HashMap<(usize, usize), usize> = HashMap::with_capacity(nnz);
    let mut entries = Vec::with_capacity(nnz);
    let mut last = size_line;
    for (line, l) in body {
        last = line;
        let toks: Vec<&str> = l.split_whitespace().collect();
        let want = if pattern { 2 } else { 3 };
        if toks.len() != want {
            return Err(parse_err(line, format!("expected {want} fields, found {}", toks.len())));
        }
        if entries.len() == nnz {
            return Err(parse_err(line, format!("more than the declared {nnz} entries")));
        }
        let i = parse_usize(toks[0], line, "row index")?;
        let j = parse_usize(toks[1], line, "column index")?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(Error::OutOfBounds { row: i, col: j, line });
        }
        let value = if pattern { 1.0 } else { parse_f64(toks[2], line)? };
        if seen.insert((i - 1, j - 1), line).is_some() {
            return Err(Error::DuplicateEntry { row: i, col: j, line });
        }
        entries.push(((i - 1, j - 1), value));
    }
    if entries.len() != nnz {
        return Err(parse_err(last, format!("declared {nnz} entries, found {}", entries.len())));
    }
    entries.sort_by_key(|&(pos, _)| pos);
    let (pos, values): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
    Ok(MatrixMarket::Coordinate { rows, cols, omega: IndexSet::new(pos)?, values })
}

/// Writes 1-based coordinate entries with 17 significant digits.
pub fn write_matrix_market_coordinate(
    path: impl AsRef<Path>,
    rows: usize,
    cols: usize,
    omega: &IndexSet,
    values: &[f64],
) -> Result<()> {
    if omega.len() != values.len() {
        return Err(Error::dims(format!("{} positions, {} values", omega.len(), values.len())));
    }
    if !omega.fits(rows, cols) {
        return Err(Error::dims(format!("index set does not fit {rows}x{cols}")));
    }
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{rows} {cols} {}", values.len())?;
    for ((i, j), v) in omega.iter().zip(values) {
        writeln!(out, "{} {} {v:.16e}", i + 1, j + 1)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a dense matrix in column-major array format.
pub fn write_matrix_market_array(path: impl AsRef<Path>, x: &DenseMatrix) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} {}", x.rows(), x.cols())?;
    for v in x.to_col_major() {
        writeln!(out, "{v:.16e}")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_entry() {
        let text = "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 1\n1 2 7.0\n";
        let MatrixMarket::Coordinate { omega, values, .. } = parse_matrix_market(text).unwrap() else {
            panic!("expected coordinate");
        };
        assert_eq!(omega.entries(), &[(0, 1)]);
        assert_eq!(values, vec![7.0]);
    }

    #[test]
    fn array_is_column_major() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n3\n2\n4\n";
        assert_eq!(
            parse_matrix_market(text).unwrap(),
            MatrixMarket::Array(DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]))
        );
    }

    #[test]
    fn pattern_entries_are_ones() {
        let text = "%%MatrixMarket matrix coordinate pattern general\n3 3 2\n3 1\n1 1\n";
        let MatrixMarket::Coordinate { omega, values, .. } = parse_matrix_market(text).unwrap() else {
            panic!("expected coordinate");
        };
        assert_eq!(omega.entries(), &[(0, 0), (2, 0)]);
        assert_eq!(values, vec![1.0, 1.0]);
    }

    #[test]
    fn duplicate_and_bounds_report_lines() {
        let dup = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n1 1 2\n";
        assert!(matches!(parse_matrix_market(dup), Err(Error::DuplicateEntry { row: 1, col: 1, line: 4 })));
        let oob = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n";
        assert!(matches!(parse_matrix_market(oob), Err(Error::OutOfBounds { row: 3, col: 1, line: 3 })));
    }
}
