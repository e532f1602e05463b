//! Robust low-rank matrix completion over the Grassmann manifold.
//!
//! The target matrix is factored as UV with U an orthonormal m×r basis and
//! V an r×n coefficient block; gross corruptions are captured by a sparse S
//! living only on the observed index set. The solvers are proximal-gradient
//! iterations on the manifold (Jacobi and Gauss-Seidel orderings) plus a
//! continuation wrapper that anneals the l1 weight.

pub mod datagen;
pub mod error;
pub mod grassmann;
pub mod metrics;
pub mod objective;
pub mod observation;
pub mod solver;

pub use error::{Result, RmcError};
pub use grassmann::{GrassmannPoint, TangentVector};
pub use metrics::FactorReference;
pub use objective::{IterateState, ProblemInstance};
pub use observation::{ObservationSet, SparseOnOmega};
pub use solver::{
    Algorithm, ContinuationSchedule, ConvergenceRecord, Monitor, Solution, SolverConfig,
    Status,
};
