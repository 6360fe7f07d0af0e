use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lowrank_gn::io::{read_dense_csv, read_matrix_market, write_dense_csv, write_matrix_market_array, MatrixMarket};
use lowrank_gn::{DenseMatrix, Error, IterationTrace, Result};

/// Ordered key=value run summary. Floats use 17 significant digits.
#[derive(Debug, Default)]
pub struct Summary {
    lines: Vec<(String, String)>,
}

impl Summary {
    pub fn text(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn float(&mut self, key: &str, value: f64) {
        self.text(key, format!("{value:.16e}"));
    }

    pub fn render(&self) -> String {
        self.lines.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        let text = self.render();
        print!("{text}");
        if let Some(path) = path {
            std::fs::write(path, text)?;
        }
        Ok(())
    }
}

pub fn write_trace(path: &Path, trace: &IterationTrace) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    trace.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn is_mtx(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mtx"))
}

/// Dense matrix from a Matrix Market array file (`.mtx`) or headerless CSV.
pub fn read_dense(path: &Path) -> Result<DenseMatrix> {
    if !is_mtx(path) {
        return read_dense_csv(path);
    }
    match read_matrix_market(path)? {
        MatrixMarket::Array(x) => Ok(x),
        MatrixMarket::Coordinate { .. } => {
            Err(Error::InvalidArgument(format!("{} holds coordinate data, expected an array", path.display())))
        }
    }
}

pub fn write_dense(path: &Path, x: &DenseMatrix) -> Result<()> {
    if is_mtx(path) {
        write_matrix_market_array(path, x)
    } else {
        write_dense_csv(path, x)
    }
}

/// `<stem><suffix>.csv`, dropping a trailing `.csv` from the stem.
pub fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let base = match stem.extension() {
        Some(e) if e.eq_ignore_ascii_case("csv") => stem.with_extension(""),
        _ => stem.to_path_buf(),
    };
    let mut name = base.into_os_string();
    name.push(format!("{suffix}.csv"));
    PathBuf::from(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes() {
        assert_eq!(with_suffix(Path::new("out/run.csv"), "-fsgn"), PathBuf::from("out/run-fsgn.csv"));
        assert_eq!(with_suffix(Path::new("run"), "-3-adm"), PathBuf::from("run-3-adm.csv"));
    }

    #[test]
    fn floats_are_round_trippable() {
        let mut s = Summary::default();
        s.text("status", "max_iters");
        s.float("objective", 0.1);
        assert_eq!(s.render(), "status=max_iters\nobjective=1.0000000000000001e-1\n");
    }
}
