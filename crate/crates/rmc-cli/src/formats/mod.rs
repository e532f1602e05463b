//! File formats: sparse observations, dense factors, PGM frames, CSV logs.
//!
//! All writers go through [`atomic_write`]: content is staged in a temporary
//! file in the destination directory and renamed into place, so a failed
//! write never leaves a partial file behind.

pub mod csv_log;
pub mod dense;
pub mod matrix_market;
pub mod pgm;

use std::io::Write;
use std::path::Path;

use crate::error::{CliError, Result};

/// Write `bytes` to `path` atomically (temp file + rename).
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}
