//! Factor-space evaluation metrics.
//!
//! Both metrics use the Gram trick
//!     ‖AB − CD‖_F² = ‖AB‖² + ‖CD‖² − 2·Tr((AᵀC)(D·Bᵀ))
//! so no m×n product is ever formed. When the left factor is orthonormal,
//! ‖AB‖_F = ‖B‖_F.

use nalgebra::DMatrix;

use crate::error::{Result, RmcError};
use crate::grassmann::GrassmannPoint;

/// Ground-truth factors with their product norm precomputed once.
#[derive(Debug, Clone)]
pub struct FactorReference {
    u_star: DMatrix<f64>,
    v_star: DMatrix<f64>,
    norm_x_sq: f64,
}

impl FactorReference {
    pub fn new(u_star: DMatrix<f64>, v_star: DMatrix<f64>) -> Result<Self> {
        if u_star.ncols() != v_star.nrows() {
            return Err(RmcError::DimensionMismatch(format!(
                "factor shapes {}x{} and {}x{} do not chain",
                u_star.nrows(),
                u_star.ncols(),
                v_star.nrows(),
                v_star.ncols()
            )));
        }
        // ‖U*V*‖² = Tr((U*ᵀU*)(V*V*ᵀ))
        let gram_u = u_star.transpose() * &u_star;
        let gram_v = &v_star * v_star.transpose();
        let norm_x_sq = (gram_u * gram_v).trace();
        Ok(Self { u_star, v_star, norm_x_sq })
    }

    pub fn norm_x_sq(&self) -> f64 {
        self.norm_x_sq
    }
}

fn check_shapes(
    u: &GrassmannPoint,
    v: &DMatrix<f64>,
    m: usize,
    n: usize,
) -> Result<()> {
    if u.nrows() != m || v.ncols() != n || u.ncols() != v.nrows() {
        return Err(RmcError::DimensionMismatch(format!(
            "iterate factors {}x{} / {}x{} against a {m}x{n} reference",
            u.nrows(),
            u.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    Ok(())
}

/// ‖UV − U*V*‖_F / ‖U*V*‖_F
pub fn relative_difference(
    u: &GrassmannPoint,
    v: &DMatrix<f64>,
    reference: &FactorReference,
) -> Result<f64> {
    check_shapes(u, v, reference.u_star.nrows(), reference.v_star.ncols())?;
    let cross = (u.basis().transpose() * &reference.u_star)
        .dot(&(v * reference.v_star.transpose()));
    let num_sq = (v.norm_squared() + reference.norm_x_sq - 2.0 * cross).max(0.0);
    Ok((num_sq / reference.norm_x_sq).sqrt())
}

/// ‖UV − U_prev·V_prev‖_F / ‖U_prev·V_prev‖_F for two orthonormal-left pairs.
pub fn stability_gap(
    u: &GrassmannPoint,
    v: &DMatrix<f64>,
    u_prev: &GrassmannPoint,
    v_prev: &DMatrix<f64>,
) -> Result<f64> {
    check_shapes(u, v, u_prev.nrows(), v_prev.ncols())?;
    let den_sq = v_prev.norm_squared();
    if den_sq == 0.0 {
        return Err(RmcError::ZeroDenominator);
    }
    let cross = (u.basis().transpose() * u_prev.basis()).dot(&(v * v_prev.transpose()));
    let num_sq = (v.norm_squared() + den_sq - 2.0 * cross).max(0.0);
    Ok((num_sq / den_sq).sqrt())
}
