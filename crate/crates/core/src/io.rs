use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn open_reader(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Strict numeric cell parsing; `col` is 1-based.
pub(crate) fn parse_f64(cell: &str, source: &str, line: usize, col: usize) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| {
        Error::parse(source, line, format!("column {col}: `{cell}` is not a number"))
    })?;
    if !v.is_finite() {
        return Err(Error::parse(
            source,
            line,
            format!("column {col}: `{cell}` is not finite"),
        ));
    }
    Ok(v)
}

pub(crate) fn create(path: &Path) -> Result<std::io::BufWriter<File>> {
    File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}
