//! CSV convergence logs.

use std::fmt::Write as _;
use std::path::Path;

use rmc_core::ConvergenceRecord;

use crate::error::Result;
use crate::formats::atomic_write;

/// Fixed column order for every convergence log.
pub const CSV_HEADER: &str = "iter,elapsed_s,F,norm_dU_sq,norm_dS_sq,gamma,epsilon,rel_diff";

/// Render records as CSV text (rel_diff blank when no ground truth).
pub fn render_convergence_csv(records: &[ConvergenceRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},",
            r.iter, r.elapsed_s, r.f, r.norm_du_sq, r.norm_ds_sq, r.gamma, r.epsilon
        );
        if let Some(d) = r.rel_diff {
            let _ = write!(out, "{d}");
        }
        out.push('\n');
    }
    out
}

/// Write a convergence log atomically.
pub fn write_convergence_csv(path: &Path, records: &[ConvergenceRecord]) -> Result<()> {
    atomic_write(path, render_convergence_csv(records).as_bytes())
}
