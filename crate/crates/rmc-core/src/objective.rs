//! The completion objective: smooth part evaluation, the block-diagonal
//! inner V-solve, and the S/U gradients.
//!
//! The inner problem decouples by column: for column j with observed rows
//! Ω_j, the normal-equation block is
//!     A_j = (1−λ²)·U_{Ω_j}ᵀU_{Ω_j} + λ²·I_r,   b_j = U_{Ω_j}ᵀ(M−S)_{Ω_j,j},
//! and each block is solved by a Cholesky factorization. A_j depends only on
//! U and Ω, so the factorizations are kept in [`VSolver`] and reused when the
//! same U is paired with a different S.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::error::{Result, RmcError};
use crate::grassmann::{self, GrassmannPoint, TangentVector};
use crate::observation::{
    project_complement_norm_sq, residual_on_omega, ObservationSet, SparseOnOmega,
};

/// One robust-completion problem: mask, rank, and the two weights.
#[derive(Debug, Clone, Copy)]
pub struct ProblemInstance<'a> {
    pub obs: &'a ObservationSet,
    pub rank: usize,
    pub lambda: f64,
    pub gamma: f64,
}

impl<'a> ProblemInstance<'a> {
    pub fn new(obs: &'a ObservationSet, rank: usize, lambda: f64, gamma: f64) -> Result<Self> {
        if rank == 0 || rank > obs.nrows().min(obs.ncols()) {
            return Err(RmcError::InvalidSpec(format!(
                "rank {rank} out of range for a {}x{} problem",
                obs.nrows(),
                obs.ncols()
            )));
        }
        // NaN fails both comparisons and is rejected here too
        if lambda.is_nan() || lambda < 0.0 || gamma.is_nan() || gamma <= 0.0 {
            return Err(RmcError::InvalidSpec(
                "need lambda >= 0 and gamma > 0".into(),
            ));
        }
        Ok(Self { obs, rank, lambda, gamma })
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }
}

/// Cached per-column Cholesky factors of the V-solve blocks for a fixed U.
#[derive(Debug)]
pub struct VSolver {
    factors: Vec<Cholesky<f64, Dyn>>,
    rank: usize,
}

impl VSolver {
    pub fn new(obs: &ObservationSet, u: &GrassmannPoint, lambda: f64) -> Result<Self> {
        if u.nrows() != obs.nrows() {
            return Err(RmcError::DimensionMismatch(format!(
                "U has {} rows, observations have {}",
                u.nrows(),
                obs.nrows()
            )));
        }
        let r = u.ncols();
        let ub = u.basis();
        let lam_sq = lambda * lambda;
        let factors: std::result::Result<Vec<_>, usize> = (0..obs.ncols())
            .into_par_iter()
            .map(|j| {
                let rows = obs.col_rows(j);
                let mut a = DMatrix::zeros(r, r);
                for &i in rows {
                    for k in 0..r {
                        let uik = ub[(i, k)];
                        for l in k..r {
                            a[(k, l)] += uik * ub[(i, l)];
                        }
                    }
                }
                for k in 0..r {
                    for l in k..r {
                        let val = (1.0 - lam_sq) * a[(k, l)];
                        a[(k, l)] = val;
                        a[(l, k)] = val;
                    }
                    a[(k, k)] += lam_sq;
                }
                a.cholesky().ok_or(j)
            })
            .collect();
        match factors {
            Ok(factors) => Ok(Self { factors, rank: r }),
            Err(col) => Err(RmcError::SingularBlock { col }),
        }
    }

    /// Solves for V_{U,S} given the S the right-hand side depends on.
    pub fn solve(
        &self,
        obs: &ObservationSet,
        u: &GrassmannPoint,
        s: &SparseOnOmega,
    ) -> Result<DMatrix<f64>> {
        if s.len() != obs.nnz() {
            return Err(RmcError::DimensionMismatch(format!(
                "S has {} entries, Ω has {}",
                s.len(),
                obs.nnz()
            )));
        }
        let r = self.rank;
        let ub = u.basis();
        let cols: Vec<DVector<f64>> = (0..obs.ncols())
            .into_par_iter()
            .map(|j| {
                let mut b = DVector::zeros(r);
                let range = obs.col_range(j);
                let rows = obs.col_rows(j);
                let m_vals = obs.col_values(j);
                for (idx, &i) in rows.iter().enumerate() {
                    let w = m_vals[idx] - s.values()[range.start + idx];
                    for k in 0..r {
                        b[k] += ub[(i, k)] * w;
                    }
                }
                self.factors[j].solve(&b)
            })
            .collect();
        let mut v = DMatrix::zeros(r, obs.ncols());
        for (j, col) in cols.iter().enumerate() {
            v.set_column(j, col);
        }
        Ok(v)
    }
}

/// Solves the inner V problem from scratch (factorize + solve).
pub fn solve_v(
    obs: &ObservationSet,
    u: &GrassmannPoint,
    s: &SparseOnOmega,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    VSolver::new(obs, u, lambda)?.solve(obs, u, s)
}

/// Smooth part: ½‖P_Ω(UV−M+S)‖_F² + (λ²/2)‖P_Ω̄(UV)‖_F².
pub fn eval_fbar(
    obs: &ObservationSet,
    u: &GrassmannPoint,
    v: &DMatrix<f64>,
    s: &SparseOnOmega,
    lambda: f64,
) -> Result<f64> {
    let res = residual_on_omega(obs, u, v, s)?;
    let complement = project_complement_norm_sq(obs, u, v)?;
    Ok(0.5 * res.norm_sq() + 0.5 * lambda * lambda * complement)
}

/// Full objective: smooth part plus γ‖P_Ω(S)‖₁.
pub fn eval_objective(
    obs: &ObservationSet,
    u: &GrassmannPoint,
    v: &DMatrix<f64>,
    s: &SparseOnOmega,
    lambda: f64,
    gamma: f64,
) -> Result<f64> {
    Ok(eval_fbar(obs, u, v, s, lambda)? + gamma * s.l1_norm())
}

/// Reduced objective f(U,S): V solved to optimality, then the smooth part.
pub fn eval_reduced(
    obs: &ObservationSet,
    u: &GrassmannPoint,
    s: &SparseOnOmega,
    lambda: f64,
) -> Result<(DMatrix<f64>, f64)> {
    let v = solve_v(obs, u, s, lambda)?;
    let f = eval_fbar(obs, u, &v, s, lambda)?;
    Ok((v, f))
}

/// The solver triple (U, V, S) with the residual and objective caches kept
/// consistent by construction.
#[derive(Debug, Clone)]
pub struct IterateState {
    u: GrassmannPoint,
    v: DMatrix<f64>,
    s: SparseOnOmega,
    residual: SparseOnOmega,
    f_value: f64,
}

impl IterateState {
    /// Builds the state from parts, computing the caches.
    /// V is expected to be the inner minimizer for (U, S); the gradient
    /// formulas below rely on that.
    pub fn new(
        obs: &ObservationSet,
        u: GrassmannPoint,
        v: DMatrix<f64>,
        s: SparseOnOmega,
        lambda: f64,
    ) -> Result<Self> {
        let residual = residual_on_omega(obs, &u, &v, &s)?;
        let complement = project_complement_norm_sq(obs, &u, &v)?;
        let f_value = 0.5 * residual.norm_sq() + 0.5 * lambda * lambda * complement;
        Ok(Self { u, v, s, residual, f_value })
    }

    pub fn u(&self) -> &GrassmannPoint {
        &self.u
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn s(&self) -> &SparseOnOmega {
        &self.s
    }

    pub fn residual(&self) -> &SparseOnOmega {
        &self.residual
    }

    /// Cached f̄(U,V,S).
    pub fn f_bar(&self) -> f64 {
        self.f_value
    }

    pub fn into_parts(self) -> (GrassmannPoint, DMatrix<f64>, SparseOnOmega) {
        (self.u, self.v, self.s)
    }
}

/// ∇_S f(U,S) = P_Ω(UV−M+S), read from the residual cache.
pub fn grad_s(state: &IterateState) -> SparseOnOmega {
    state.residual.clone()
}

/// Riemannian gradient of f with respect to U at the current iterate:
///     G = ((1−λ²)·C⊙(UV−M+S) − λ²·(M−S))·Vᵀ + λ²·U(VVᵀ),
/// with M and S read as zero off Ω, followed by a tangent projection to
/// strip the normal component left by the inexact inner solve.
pub fn grad_u(
    state: &IterateState,
    obs: &ObservationSet,
    lambda: f64,
) -> Result<TangentVector> {
    let u = &state.u;
    let v = &state.v;
    if state.residual.len() != obs.nnz() {
        return Err(RmcError::StaleState);
    }
    let (m, r) = (u.nrows(), u.ncols());
    let lam_sq = lambda * lambda;
    let mut g = DMatrix::zeros(m, r);
    for j in 0..obs.ncols() {
        let range = obs.col_range(j);
        let rows = obs.col_rows(j);
        let m_vals = obs.col_values(j);
        for (idx, &i) in rows.iter().enumerate() {
            let p = range.start + idx;
            let w = (1.0 - lam_sq) * state.residual.values()[p]
                - lam_sq * (m_vals[idx] - state.s.values()[p]);
            for k in 0..r {
                g[(i, k)] += w * v[(k, j)];
            }
        }
    }
    let vvt = v * v.transpose();
    g += u.basis() * vvt * lam_sq;
    grassmann::tangent_project(u, &g)
}
