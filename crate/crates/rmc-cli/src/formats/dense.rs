//! Dense binary matrix format: one ASCII header line "rows cols", then
//! row-major little-endian f64 payload.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{CliError, Result};
use crate::formats::atomic_write;

/// Write a dense matrix; read_dense inverts this bitwise.
pub fn write_dense(path: &Path, mat: &DMatrix<f64>) -> Result<()> {
    let mut buf = format!("{} {}\n", mat.nrows(), mat.ncols()).into_bytes();
    buf.reserve(mat.len() * 8);
    for i in 0..mat.nrows() {
        for j in 0..mat.ncols() {
            buf.extend_from_slice(&mat[(i, j)].to_le_bytes());
        }
    }
    atomic_write(path, &buf)
}

/// Read a matrix written by [`write_dense`].
pub fn read_dense(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| CliError::parse(path, 1, "missing header line"))?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| CliError::parse(path, 1, "header is not ASCII"))?;
    let mut tok = header.split_whitespace();
    let rows: usize = parse_dim(path, tok.next(), "row count")?;
    let cols: usize = parse_dim(path, tok.next(), "column count")?;
    if let Some(extra) = tok.next() {
        return Err(CliError::parse(
            path,
            1,
            format!("unexpected trailing header field \"{extra}\""),
        ));
    }

    let payload = &bytes[nl + 1..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| CliError::parse(path, 1, "dimensions overflow"))?;
    if payload.len() < expected {
        return Err(CliError::TruncatedFile {
            path: path.to_path_buf(),
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(CliError::parse(
            path,
            1,
            format!(
                "payload has {} trailing bytes beyond the {expected} promised",
                payload.len() - expected
            ),
        ));
    }
    Ok(DMatrix::from_fn(rows, cols, |i, j| {
        let off = (i * cols + j) * 8;
        f64::from_le_bytes(payload[off..off + 8].try_into().unwrap())
    }))
}

fn parse_dim(path: &Path, tok: Option<&str>, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| CliError::parse(path, 1, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| CliError::parse(path, 1, format!("invalid {what} \"{tok}\"")))
}
