use thiserror::Error;

/// Errors produced by the completion kernels and solvers.
#[derive(Debug, Error)]
pub enum RmcError {
    #[error("index ({i},{j}) out of range for a {m}x{n} matrix")]
    IndexOutOfRange { i: usize, j: usize, m: usize, n: usize },

    #[error("duplicate observation at ({i},{j})")]
    DuplicateEntry { i: usize, j: usize },

    #[error("non-finite observed value at ({i},{j})")]
    NonFiniteValue { i: usize, j: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is numerically rank deficient (min |R_kk| = {min_diag:e})")]
    RankDeficient { min_diag: f64 },

    #[error("singular normal-equation block in column {col} with lambda = 0")]
    SingularBlock { col: usize },

    #[error("iterate caches are stale; refresh before taking gradients")]
    StaleState,

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("denominator is zero: previous iterate product vanishes")]
    ZeroDenominator,

    #[error("orthonormality defect {defect:e} exceeds tolerance {tol:e}")]
    NotOrthonormal { defect: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, RmcError>;
