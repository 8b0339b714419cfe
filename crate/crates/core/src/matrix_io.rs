//! Plain-text matrix exchange format for cross-checking against external
//! tools.
//!
//! Dense format: one matrix row per line, entries separated by single spaces,
//! each written with 17 significant digits (`{:.16e}`). Banded
//! (tridiagonal) format: one line per row holding `lower diag upper`, with
//! `0` padding in the first and last rows.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::banded::SymTridiagonal;
use crate::error::{LabError, Result};

pub fn write_dense<W: Write>(mut out: W, a: &DMatrix<f64>) -> Result<()> {
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|j| format!("{:.16e}", a[(i, j)])).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_dense<R: BufRead>(input: R) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>().map_err(|e| {
                    LabError::InvalidArgument(format!("line {}: `{s}`: {e}", lineno + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(LabError::DimensionMismatch {
                    expected: first.len(),
                    got: row.len(),
                });
            }
        }
        rows.push(row);
    }
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_row_iterator(
        nrows,
        ncols,
        rows.into_iter().flatten(),
    ))
}

pub fn write_banded<W: Write>(mut out: W, a: &SymTridiagonal) -> Result<()> {
    let n = a.dim();
    for i in 0..n {
        let lower = if i > 0 { a.off()[i - 1] } else { 0.0 };
        let upper = if i + 1 < n { a.off()[i] } else { 0.0 };
        writeln!(out, "{:.16e} {:.16e} {:.16e}", lower, a.diag()[i], upper)?;
    }
    Ok(())
}

pub fn read_banded<R: BufRead>(input: R) -> Result<SymTridiagonal> {
    let rows = read_dense(input)?;
    if rows.ncols() != 3 {
        return Err(LabError::DimensionMismatch {
            expected: 3,
            got: rows.ncols(),
        });
    }
    let n = rows.nrows();
    let diag = (0..n).map(|i| rows[(i, 1)]).collect();
    let off = (0..n.saturating_sub(1)).map(|i| rows[(i, 2)]).collect();
    SymTridiagonal::new(diag, off)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_round_trip_is_exact() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0 / 3.0, -2.5e-17, 7.0, 0.1, 1e300, -0.0]);
        let mut buf = Vec::new();
        write_dense(&mut buf, &a).unwrap();
        let b = read_dense(buf.as_slice()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn banded_round_trip_is_exact() {
        let a = SymTridiagonal::new(vec![2.0 / 3.0, 1.0, 4.0], vec![-1.0 / 7.0, 0.3]).unwrap();
        let mut buf = Vec::new();
        write_banded(&mut buf, &a).unwrap();
        assert_eq!(read_banded(buf.as_slice()).unwrap(), a);
    }
}
