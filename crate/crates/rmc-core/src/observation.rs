//! Observation mask Ω and the masked arithmetic the solvers need.
//!
//! Entries are stored column-grouped (CSC-like) with row indices sorted
//! inside each column. Nothing here ever materializes a dense m×n product.

use nalgebra::DMatrix;

use crate::error::{Result, RmcError};
use crate::grassmann::GrassmannPoint;

#[cfg(debug_assertions)]
use std::cell::Cell;

#[cfg(debug_assertions)]
thread_local! {
    static INNER_PRODUCT_COUNT: Cell<u64> = const { Cell::new(0) };
}

/// Resets the debug-only counter of length-r inner products.
#[cfg(debug_assertions)]
pub fn reset_inner_product_count() {
    INNER_PRODUCT_COUNT.with(|c| c.set(0));
}

/// Reads the debug-only counter of length-r inner products.
#[cfg(debug_assertions)]
pub fn inner_product_count() -> u64 {
    INNER_PRODUCT_COUNT.with(|c| c.get())
}

#[cfg(debug_assertions)]
fn count_inner_product() {
    INNER_PRODUCT_COUNT.with(|c| c.set(c.get() + 1));
}

#[cfg(not(debug_assertions))]
#[inline(always)]
fn count_inner_product() {}

/// The observed index set Ω with the observed values of M.
///
/// Single source of truth for P_Ω. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    m: usize,
    n: usize,
    /// Row index of each entry, grouped by column, sorted within a column.
    rows: Vec<usize>,
    /// Observed value M_ij aligned with `rows`.
    values: Vec<f64>,
    /// Offsets into `rows`/`values`; length n+1.
    col_offsets: Vec<usize>,
}

impl ObservationSet {
    /// Builds the canonical column-grouped structure from (i, j, value) triples.
    pub fn from_triples(m: usize, n: usize, triples: &[(usize, usize, f64)]) -> Result<Self> {
        for &(i, j, v) in triples {
            if i >= m || j >= n {
                return Err(RmcError::IndexOutOfRange { i, j, m, n });
            }
            if !v.is_finite() {
                return Err(RmcError::NonFiniteValue { i, j });
            }
        }
        let mut counts = vec![0usize; n];
        for &(_, j, _) in triples {
            counts[j] += 1;
        }
        let mut col_offsets = vec![0usize; n + 1];
        for j in 0..n {
            col_offsets[j + 1] = col_offsets[j] + counts[j];
        }
        let nnz = triples.len();
        let mut rows = vec![0usize; nnz];
        let mut values = vec![0.0f64; nnz];
        let mut cursor = col_offsets.clone();
        for &(i, j, v) in triples {
            let p = cursor[j];
            rows[p] = i;
            values[p] = v;
            cursor[j] += 1;
        }
        // sort rows within each column, then detect duplicates as neighbors
        for j in 0..n {
            let lo = col_offsets[j];
            let hi = col_offsets[j + 1];
            let mut perm: Vec<usize> = (lo..hi).collect();
            perm.sort_by_key(|&p| rows[p]);
            let sorted_rows: Vec<usize> = perm.iter().map(|&p| rows[p]).collect();
            let sorted_vals: Vec<f64> = perm.iter().map(|&p| values[p]).collect();
            rows[lo..hi].copy_from_slice(&sorted_rows);
            values[lo..hi].copy_from_slice(&sorted_vals);
            for w in lo + 1..hi {
                if rows[w] == rows[w - 1] {
                    return Err(RmcError::DuplicateEntry { i: rows[w], j });
                }
            }
        }
        Ok(Self { m, n, rows, values, col_offsets })
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        self.n
    }

    /// |Ω|
    pub fn nnz(&self) -> usize {
        self.rows.len()
    }

    /// Row indices observed in column j.
    pub fn col_rows(&self, j: usize) -> &[usize] {
        &self.rows[self.col_offsets[j]..self.col_offsets[j + 1]]
    }

    /// Observed values of column j, aligned with `col_rows(j)`.
    pub fn col_values(&self, j: usize) -> &[f64] {
        &self.values[self.col_offsets[j]..self.col_offsets[j + 1]]
    }

    pub fn col_range(&self, j: usize) -> std::ops::Range<usize> {
        self.col_offsets[j]..self.col_offsets[j + 1]
    }

    /// All observed values in canonical entry order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates (i, j, M_ij, slot) in canonical order.
    pub fn iter_entries(&self) -> impl Iterator<Item = (usize, usize, f64, usize)> + '_ {
        (0..self.n).flat_map(move |j| {
            self.col_range(j).map(move |p| (self.rows[p], j, self.values[p], p))
        })
    }

    /// Canonical triples, handy for round-tripping through files.
    pub fn to_triples(&self) -> Vec<(usize, usize, f64)> {
        self.iter_entries().map(|(i, j, v, _)| (i, j, v)).collect()
    }

    /// P_Ω(M) applied to a dense n×r block: returns the m×r matrix X·B where
    /// X is the zero-filled observed matrix.
    pub fn apply(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if b.nrows() != self.n {
            return Err(RmcError::DimensionMismatch(format!(
                "apply: operator is {}x{}, block has {} rows",
                self.m,
                self.n,
                b.nrows()
            )));
        }
        let r = b.ncols();
        let mut out = DMatrix::zeros(self.m, r);
        for j in 0..self.n {
            for p in self.col_range(j) {
                let i = self.rows[p];
                let v = self.values[p];
                for k in 0..r {
                    out[(i, k)] += v * b[(j, k)];
                }
            }
        }
        Ok(out)
    }

    /// Transpose action of [`apply`](Self::apply): Xᵀ·A for dense m×r A.
    pub fn apply_transpose(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if a.nrows() != self.m {
            return Err(RmcError::DimensionMismatch(format!(
                "apply_transpose: operator is {}x{}, block has {} rows",
                self.m,
                self.n,
                a.nrows()
            )));
        }
        let r = a.ncols();
        let mut out = DMatrix::zeros(self.n, r);
        for j in 0..self.n {
            for p in self.col_range(j) {
                let i = self.rows[p];
                let v = self.values[p];
                for k in 0..r {
                    out[(j, k)] += v * a[(i, k)];
                }
            }
        }
        Ok(out)
    }
}

/// Values living only on Ω, aligned entry-for-entry with an [`ObservationSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOnOmega {
    values: Vec<f64>,
}

impl SparseOnOmega {
    pub fn zeros(nnz: usize) -> Self {
        Self { values: vec![0.0; nnz] }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn axpy(&mut self, alpha: f64, other: &SparseOnOmega) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }
}

fn check_dims(obs: &ObservationSet, u: &GrassmannPoint, v: &DMatrix<f64>) -> Result<()> {
    if u.nrows() != obs.nrows() || v.ncols() != obs.ncols() || u.ncols() != v.nrows() {
        return Err(RmcError::DimensionMismatch(format!(
            "obs is {}x{}, U is {}x{}, V is {}x{}",
            obs.nrows(),
            obs.ncols(),
            u.nrows(),
            u.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    Ok(())
}

/// P_Ω(UV − M + S), computed entrywise over Ω in O(|Ω|·r).
pub fn residual_on_omega(
    obs: &ObservationSet,
    u: &GrassmannPoint,
    v: &DMatrix<f64>,
    s: &SparseOnOmega,
) -> Result<SparseOnOmega> {
    check_dims(obs, u, v)?;
    if s.len() != obs.nnz() {
        return Err(RmcError::DimensionMismatch(format!(
            "S has {} entries, Ω has {}",
            s.len(),
            obs.nnz()
        )));
    }
    let ub = u.basis();
    let r = ub.ncols();
    let mut out = vec![0.0f64; obs.nnz()];
    for j in 0..obs.ncols() {
        for p in obs.col_range(j) {
            let i = obs.rows[p];
            count_inner_product();
            let mut uv = 0.0;
            for k in 0..r {
                uv += ub[(i, k)] * v[(k, j)];
            }
            out[p] = uv - obs.values[p] + s.values()[p];
        }
    }
    Ok(SparseOnOmega::from_values(out))
}

/// UV restricted to Ω (no M or S subtraction), same layout as the residual.
pub fn product_on_omega(
    obs: &ObservationSet,
    u: &GrassmannPoint,
    v: &DMatrix<f64>,
) -> Result<SparseOnOmega> {
    check_dims(obs, u, v)?;
    let ub = u.basis();
    let r = ub.ncols();
    let mut out = vec![0.0f64; obs.nnz()];
    for j in 0..obs.ncols() {
        for p in obs.col_range(j) {
            let i = obs.rows[p];
            let mut uv = 0.0;
            for k in 0..r {
                uv += ub[(i, k)] * v[(k, j)];
            }
            out[p] = uv;
        }
    }
    Ok(SparseOnOmega::from_values(out))
}

/// ‖P_Ω̄(UV)‖_F², evaluated as ‖V‖_F² − ‖P_Ω(UV)‖_F².
///
/// The first term uses orthonormality of U (‖UV‖_F = ‖V‖_F); the dense
/// product is never formed. Rounding can leave a tiny negative value when
/// Ω covers almost everything, so the result is clamped at zero.
pub fn project_complement_norm_sq(
    obs: &ObservationSet,
    u: &GrassmannPoint,
    v: &DMatrix<f64>,
) -> Result<f64> {
    check_dims(obs, u, v)?;
    let on_omega = product_on_omega(obs, u, v)?.norm_sq();
    Ok((v.norm_squared() - on_omega).max(0.0))
}
