//! Plain-text CSV matrices: one row per line, no header, dimensions inferred.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};

pub fn parse_matrix_csv(text: &str) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("row {}: {e}", line + 1)))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    Error::Parse(format!("row {}: not a number: {field:?}", line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty matrix file".to_string()));
    }
    Matrix::from_rows(&rows)
        .map_err(|_| Error::Parse("rows have different lengths".to_string()))
}

/// Reads a vector stored either as a single row or a single column.
pub fn parse_vector_csv(text: &str) -> Result<Vec<f64>> {
    let m = parse_matrix_csv(text)?;
    match (m.rows(), m.cols()) {
        (1, _) => Ok(m.row(0).to_vec()),
        (_, 1) => Ok(m.column(0)),
        (r, c) => Err(Error::Parse(format!("expected a vector, found {r}x{c} matrix"))),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    with_path(path, parse_matrix_csv(&read(path)?))
}

pub fn read_sym_matrix_csv(path: impl AsRef<Path>) -> Result<SymMatrix> {
    let path = path.as_ref();
    with_path(path, read_matrix_csv(path).and_then(SymMatrix::try_from))
}

pub fn read_vector_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    with_path(path, parse_vector_csv(&read(path)?))
}

pub fn format_matrix_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
