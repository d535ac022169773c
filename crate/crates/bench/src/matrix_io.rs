//! Plain-text matrix files.
//!
//! The first line holds `rows cols`; each following line holds one row of
//! space-separated decimals. Values are written with Rust's shortest
//! round-trip formatting, so a write/read cycle is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ppcm_core::DenseMatrix;

use crate::error::{io_err, BenchError, Result};

pub fn format_matrix(m: &DenseMatrix) -> String {
    let mut out = String::with_capacity(m.rows() * m.cols() * 20 + 16);
    let _ = writeln!(out, "{} {}", m.rows(), m.cols());
    for i in 0..m.rows() {
        for (k, v) in m.row(i).iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v:?}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<DenseMatrix> {
    let bad = |reason: String| BenchError::MatrixFormat { path: path.to_path_buf(), reason };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad(format!("bad header token {t:?}"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(bad(format!("header must be `rows cols`, got {header:?}")));
    };
    let mut data = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        if i >= rows {
            return Err(bad(format!("more than {rows} rows")));
        }
        let before = data.len();
        for t in line.split_whitespace() {
            data.push(t.parse::<f64>().map_err(|_| bad(format!("row {i}: bad value {t:?}")))?);
        }
        if data.len() - before != cols {
            return Err(bad(format!("row {i} has {} values, expected {cols}", data.len() - before)));
        }
    }
    if data.len() != rows * cols {
        return Err(bad(format!("expected {rows} rows, got {}", data.len() / cols.max(1))));
    }
    Ok(DenseMatrix::from_row_major(rows, cols, data)?)
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    fs::write(path, format_matrix(m)).map_err(io_err(path))
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_matrix(&text, path)
}

/// A vector is stored as an `m × 1` matrix.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let m = DenseMatrix::from_row_major(v.len(), 1, v.to_vec())?;
    write_matrix(path, &m)
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let m = read_matrix(path)?;
    if m.cols() != 1 {
        return Err(BenchError::MatrixFormat { path: path.to_path_buf(), reason: format!("expected 1 column, got {}", m.cols()) });
    }
    Ok(m.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_rows() {
        let m = DenseMatrix::from_rows(&[vec![1.0, -0.5], vec![1e-7, 3.25]]).unwrap();
        let text = format_matrix(&m);
        assert_eq!(text, "2 2\n1.0 -0.5\n1e-7 3.25\n");
    }

    #[test]
    fn rejects_ragged_and_short_files() {
        let p = Path::new("m.txt");
        assert!(parse_matrix("2 2\n1 2\n3\n", p).is_err());
        assert!(parse_matrix("2 2\n1 2\n", p).is_err());
        assert!(parse_matrix("2\n1 2\n", p).is_err());
        assert!(parse_matrix("1 1\n1\n2\n", p).is_err());
        assert!(parse_matrix("1 1\nabc\n", p).is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip_is_exact(
            (rows, cols, data) in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
                (Just(r), Just(c), prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, r * c))
            })
        ) {
            let m = DenseMatrix::from_row_major(rows, cols, data).unwrap();
            let back = parse_matrix(&format_matrix(&m), Path::new("x")).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
