//! MatrixMarket coordinate format for sparse observation sets.
//!
//! Only the "matrix coordinate real general" flavor is supported; indices in
//! the file are 1-based, in memory 0-based.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rmc_core::ObservationSet;

use crate::error::{CliError, Result};
use crate::formats::atomic_write;

const BANNER: &str = "%%MatrixMarket matrix coordinate real general";

/// Parse a MatrixMarket coordinate file into an [`ObservationSet`].
pub fn read_matrix_market(path: &Path) -> Result<ObservationSet> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let banner = lines
        .next()
        .ok_or_else(|| CliError::parse(path, 1, "empty file"))?
        .1
        .trim();
    if !banner.eq_ignore_ascii_case(BANNER) {
        return Err(CliError::parse(
            path,
            1,
            format!("expected banner \"{BANNER}\", found \"{banner}\""),
        ));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triples: Vec<(usize, usize, f64)> = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let mut tok = line.split_whitespace();
        if size.is_none() {
            let m = parse_field::<usize>(path, line_no, tok.next(), "row count")?;
            let n = parse_field::<usize>(path, line_no, tok.next(), "column count")?;
            let nnz = parse_field::<usize>(path, line_no, tok.next(), "entry count")?;
            reject_trailing(path, line_no, tok.next())?;
            size = Some((m, n, nnz));
            triples.reserve(nnz);
        } else {
            let i = parse_field::<usize>(path, line_no, tok.next(), "row index")?;
            let j = parse_field::<usize>(path, line_no, tok.next(), "column index")?;
            let v = parse_field::<f64>(path, line_no, tok.next(), "value")?;
            reject_trailing(path, line_no, tok.next())?;
            if i == 0 || j == 0 {
                return Err(CliError::parse(path, line_no, "indices are 1-based"));
            }
            triples.push((i - 1, j - 1, v));
        }
    }

    let (m, n, nnz) =
        size.ok_or_else(|| CliError::parse(path, 2, "missing size line"))?;
    if triples.len() != nnz {
        return Err(CliError::parse(
            path,
            1,
            format!("size line promises {nnz} entries, found {}", triples.len()),
        ));
    }
    Ok(ObservationSet::from_triples(m, n, &triples)?)
}

/// Write an [`ObservationSet`] in MatrixMarket coordinate form.
pub fn write_matrix_market(path: &Path, obs: &ObservationSet) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{BANNER}");
    let _ = writeln!(out, "{} {} {}", obs.nrows(), obs.ncols(), obs.nnz());
    for (i, j, v, _slot) in obs.iter_entries() {
        // f64 Display is shortest-round-trip, so read inverts write exactly
        let _ = writeln!(out, "{} {} {}", i + 1, j + 1, v);
    }
    atomic_write(path, out.as_bytes())
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    tok: Option<&str>,
    what: &str,
) -> Result<T> {
    let tok = tok.ok_or_else(|| CliError::parse(path, line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| CliError::parse(path, line, format!("invalid {what} \"{tok}\"")))
}

fn reject_trailing(path: &Path, line: usize, tok: Option<&str>) -> Result<()> {
    match tok {
        Some(extra) => Err(CliError::parse(
            path,
            line,
            format!("unexpected trailing field \"{extra}\""),
        )),
        None => Ok(()),
    }
}
