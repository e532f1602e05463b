//! ManPG / AManPG iterations and the continuation wrapper.
//!
//! Both algorithms share one loop body. ManPG is Jacobi: the U gradient is
//! taken at (U^k, S^k) with the V already solved for that pair. AManPG is
//! Gauss-Seidel: after the S update the V problem is re-solved at
//! (U^k, S^{k+1}), reusing the per-column factorizations, and the U gradient
//! is taken there.
//!
//! Termination tests the freshly computed steps: ‖ΔU^k‖² + ‖ΔS^k‖² against
//! the configured squared threshold at the end of iteration k.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::error::{Result, RmcError};
use crate::grassmann::{self, GrassmannPoint, TangentVector};
use crate::metrics::{relative_difference, stability_gap, FactorReference};
use crate::objective::{
    eval_reduced, grad_s, grad_u, IterateState, ProblemInstance, VSolver,
};
use crate::observation::{ObservationSet, SparseOnOmega};

/// Relaxation steps of the S and U updates. Fixed at one.
pub const ALPHA: f64 = 1.0;
pub const BETA: f64 = 1.0;

/// Lipschitz constant of the S-gradient: the S-Hessian of the smooth part at
/// fixed V is the mask projector, so its spectral norm is at most one.
pub const L_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    ManPg,
    AManPg,
}

/// How the termination threshold is interpreted.
#[derive(Debug, Clone, Copy)]
pub enum TolSpec {
    /// Raw squared threshold: stop when ‖ΔU‖²+‖ΔS‖² ≤ value.
    /// This is the pseudocode convention (threshold = ε²).
    RawSq(f64),
    /// Stationarity-definition convention: stop at ε²/L², with
    /// L = min(L_S, L_U) taken from the probed curvature.
    EpsOverL(f64),
}

/// Step-size regime.
#[derive(Debug, Clone, Copy)]
pub enum StepMode {
    /// Fixed t_S and t_U from the config.
    Practical,
    /// t_S = 1/L_S, t_U = 1/L_U with L_U probed by doubling until the
    /// pullback upper bound holds along the current step.
    Conservative { initial_l_u: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub t_s: f64,
    pub t_u: f64,
    pub tol: TolSpec,
    pub max_iters: usize,
    pub log_every: usize,
    pub mode: StepMode,
}

impl SolverConfig {
    /// Practical defaults: t_S = 1, t_U = 2/|Ω|, threshold ε².
    pub fn practical(nnz: usize, epsilon: f64) -> Self {
        Self {
            t_s: 1.0,
            t_u: 2.0 / nnz as f64,
            tol: TolSpec::RawSq(epsilon * epsilon),
            max_iters: 500,
            log_every: 1,
            mode: StepMode::Practical,
        }
    }

    /// Theoretically safe variant: unit S step, probed U step.
    pub fn conservative(epsilon: f64) -> Self {
        Self {
            t_s: 1.0 / L_S,
            t_u: 0.0, // unused; replaced by 1/L_U
            tol: TolSpec::RawSq(epsilon * epsilon),
            max_iters: 500,
            log_every: 1,
            mode: StepMode::Conservative { initial_l_u: 1.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t_u_ok = match self.mode {
            StepMode::Practical => self.t_u > 0.0,
            StepMode::Conservative { initial_l_u } => initial_l_u > 0.0,
        };
        let tol_ok = match self.tol {
            TolSpec::RawSq(t) => t >= 0.0,
            TolSpec::EpsOverL(e) => e > 0.0,
        };
        if self.t_s > 0.0 && t_u_ok && tol_ok && self.max_iters >= 1 {
            Ok(())
        } else {
            Err(RmcError::InvalidSpec("solver config out of range".into()))
        }
    }
}

/// γ / ε continuation schedule.
#[derive(Debug, Clone, Copy)]
pub struct ContinuationSchedule {
    pub gamma0: f64,
    pub gamma_min: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub epsilon0: f64,
}

impl ContinuationSchedule {
    /// γ₀ = 10, μ₁ = μ₂ = 1/10, γ_min = 10⁻⁴·γ₀ (= 10⁻³), so the schedule
    /// runs four rounds: γ ∈ {10, 1, 0.1, 0.01}.
    pub fn standard(epsilon0: f64) -> Self {
        Self { gamma0: 10.0, gamma_min: 1e-3, mu1: 0.1, mu2: 0.1, epsilon0 }
    }

    /// A schedule with gamma0 <= gamma_min is allowed: the continuation loop
    /// then runs zero rounds and passes the warm start through.
    pub fn validate(&self) -> Result<()> {
        if self.gamma0 > 0.0
            && self.gamma_min > 0.0
            && self.mu1 > 0.0
            && self.mu1 < 1.0
            && self.mu2 > 0.0
            && self.mu2 < 1.0
            && self.epsilon0 > 0.0
        {
            Ok(())
        } else {
            Err(RmcError::InvalidSpec("continuation schedule out of range".into()))
        }
    }
}

/// The pair of steps computed in one iteration, with their squared norms.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub delta_s: SparseOnOmega,
    pub delta_u: TangentVector,
    pub norm_ds_sq: f64,
    pub norm_du_sq: f64,
}

/// ‖ΔS‖_F² + ‖ΔU‖_F², the quantity tested for termination.
pub fn stationarity_residual(step: &StepResult) -> f64 {
    step.norm_ds_sq + step.norm_du_sq
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    IterationCapReached,
    /// Stopped by the stability rule of the background pipeline.
    Stable,
}

/// One per-iteration log row.
#[derive(Debug, Clone)]
pub struct ConvergenceRecord {
    pub iter: usize,
    pub elapsed_s: f64,
    pub f: f64,
    pub norm_du_sq: f64,
    pub norm_ds_sq: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub rel_diff: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub u: GrassmannPoint,
    pub v: DMatrix<f64>,
    pub s: SparseOnOmega,
    pub records: Vec<ConvergenceRecord>,
    pub status: Status,
    pub iterations: usize,
    /// Smallest L_U accepted by the conservative probe, if that mode ran.
    pub probed_l_u: Option<f64>,
}

/// Accumulates timing, log rows, and the optional ground-truth / stability
/// hooks across one run (including all continuation rounds).
pub struct Monitor<'a> {
    start: Instant,
    pub records: Vec<ConvergenceRecord>,
    reference: Option<&'a FactorReference>,
    stability_delta: Option<f64>,
    prev_product: Option<(GrassmannPoint, DMatrix<f64>)>,
    total_iters: usize,
}

impl<'a> Monitor<'a> {
    pub fn new() -> Self {
        Self {
            start: Instant::now(),
            records: Vec::new(),
            reference: None,
            stability_delta: None,
            prev_product: None,
            total_iters: 0,
        }
    }

    pub fn with_reference(mut self, reference: &'a FactorReference) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_stability_rule(mut self, delta: f64) -> Self {
        self.stability_delta = Some(delta);
        self
    }

    pub fn total_iterations(&self) -> usize {
        self.total_iters
    }

    /// Forget the last product so the stability gap is not measured across a
    /// continuation-round boundary (the objective changed under the iterate).
    pub fn reset_stability(&mut self) {
        self.prev_product = None;
    }

    #[allow(clippy::too_many_arguments)]
    fn observe(
        &mut self,
        u: &GrassmannPoint,
        v: &DMatrix<f64>,
        f: f64,
        norm_du_sq: f64,
        norm_ds_sq: f64,
        gamma: f64,
        epsilon: f64,
        log_every: usize,
    ) -> Result<bool> {
        let iter = self.total_iters;
        self.total_iters += 1;
        if log_every > 0 && iter.is_multiple_of(log_every) {
            let rel_diff = match self.reference {
                Some(rf) => Some(relative_difference(u, v, rf)?),
                None => None,
            };
            self.records.push(ConvergenceRecord {
                iter,
                elapsed_s: self.start.elapsed().as_secs_f64(),
                f,
                norm_du_sq,
                norm_ds_sq,
                gamma,
                epsilon,
                rel_diff,
            });
        }
        let mut stable = false;
        if let Some(delta) = self.stability_delta {
            if let Some((pu, pv)) = &self.prev_product {
                stable = stability_gap(u, v, pu, pv)? <= delta;
            }
            self.prev_product = Some((u.clone(), v.clone()));
        }
        Ok(stable)
    }
}

impl Default for Monitor<'_> {
    fn default() -> Self {
        Self::new()
    }
}

/// Proximal step on S (Eq.-(17)-style shrinkage): for every observed entry,
/// ΔS = soft(S − t_S·∇_S f; γ·t_S) − S. Off Ω the step is identically zero.
pub fn prox_step_s(state: &IterateState, t_s: f64, gamma: f64) -> SparseOnOmega {
    let g = grad_s(state);
    let tau = gamma * t_s;
    let values = state
        .s()
        .values()
        .iter()
        .zip(g.values())
        .map(|(&s, &gi)| soft_threshold(s - t_s * gi, tau) - s)
        .collect();
    SparseOnOmega::from_values(values)
}

/// sign(x)·max(|x|−τ, 0)
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    x.signum() * (x.abs() - tau).max(0.0)
}

/// Riemannian gradient step on U: ΔU = −t_U·grad_U f.
pub fn grad_step_u(
    state: &IterateState,
    obs: &ObservationSet,
    lambda: f64,
    t_u: f64,
) -> Result<TangentVector> {
    Ok(grad_u(state, obs, lambda)?.scale(-t_u))
}

fn tangent_inner(a: &TangentVector, b: &TangentVector) -> f64 {
    a.matrix().dot(b.matrix())
}

struct InnerOutcome {
    solution: Solution,
}

fn threshold_for(tol: TolSpec, l_u: f64) -> f64 {
    match tol {
        TolSpec::RawSq(t) => t,
        TolSpec::EpsOverL(eps) => {
            let l = L_S.min(l_u);
            eps * eps / (l * l)
        }
    }
}

fn solve_loop(
    algo: Algorithm,
    problem: ProblemInstance<'_>,
    config: &SolverConfig,
    u0: GrassmannPoint,
    s0: SparseOnOmega,
    monitor: &mut Monitor<'_>,
) -> Result<InnerOutcome> {
    config.validate()?;
    let obs = problem.obs;
    let (lambda, gamma) = (problem.lambda, problem.gamma);
    if s0.len() != obs.nnz() {
        return Err(RmcError::DimensionMismatch(format!(
            "S0 has {} entries, Ω has {}",
            s0.len(),
            obs.nnz()
        )));
    }
    let records_start = monitor.records.len();
    let epsilon_logged = match config.tol {
        TolSpec::RawSq(t) => t.sqrt(),
        TolSpec::EpsOverL(e) => e,
    };

    let mut u = u0;
    let mut s = s0;
    let mut l_u = match config.mode {
        StepMode::Conservative { initial_l_u } => initial_l_u,
        StepMode::Practical => 0.0,
    };
    let mut min_accepted_l_u = f64::INFINITY;
    let mut status = Status::IterationCapReached;
    let mut iterations = 0;

    for _ in 0..config.max_iters {
        let vsolver = VSolver::new(obs, &u, lambda)?;
        let v = vsolver.solve(obs, &u, &s)?;
        let state = IterateState::new(obs, u.clone(), v, s.clone(), lambda)?;
        let f_current = state.f_bar() + gamma * s.l1_norm();

        let delta_s = prox_step_s(&state, config.t_s, gamma);
        let mut s_next = s.clone();
        s_next.axpy(ALPHA, &delta_s);

        // where the U gradient is taken: (U^k,S^k) for ManPG,
        // (U^k,S^{k+1}) for AManPG with the A factors reused
        let grad_state = match algo {
            Algorithm::ManPg => state.clone(),
            Algorithm::AManPg => {
                let v_new = vsolver.solve(obs, &u, &s_next)?;
                IterateState::new(obs, u.clone(), v_new, s_next.clone(), lambda)?
            }
        };
        let gradient = grad_u(&grad_state, obs, lambda)?;

        let (delta_u, u_next) = match config.mode {
            StepMode::Practical => {
                let delta_u = gradient.scale(-config.t_u);
                let u_next = grassmann::retract_qr(&u, &delta_u.scale(BETA))?;
                (delta_u, u_next)
            }
            StepMode::Conservative { .. } => loop {
                let delta_u = gradient.scale(-1.0 / l_u);
                let u_next = grassmann::retract_qr(&u, &delta_u.scale(BETA))?;
                let s_used = grad_state.s();
                let (_, f_trial) = eval_reduced(obs, &u_next, s_used, lambda)?;
                let f_base = grad_state.f_bar();
                let linear = tangent_inner(&delta_u, &gradient);
                let quad = 0.5 * l_u * delta_u.norm_sq();
                let slack = 1e-12 * f_base.abs().max(1.0);
                if f_trial <= f_base + linear + quad + slack || l_u > 1e16 {
                    min_accepted_l_u = min_accepted_l_u.min(l_u);
                    break (delta_u, u_next);
                }
                l_u *= 2.0;
            },
        };

        let step = StepResult {
            norm_ds_sq: delta_s.norm_sq(),
            norm_du_sq: delta_u.norm_sq(),
            delta_s,
            delta_u,
        };

        let stable = monitor.observe(
            state.u(),
            state.v(),
            f_current,
            step.norm_du_sq,
            step.norm_ds_sq,
            gamma,
            epsilon_logged,
            config.log_every,
        )?;
        iterations += 1;

        if stable {
            // keep the iterate the stability test saw
            status = Status::Stable;
            break;
        }

        s = s_next;
        u = u_next;

        if stationarity_residual(&step) <= threshold_for(config.tol, l_u) {
            status = Status::Converged;
            break;
        }
    }

    // final V consistent with the returned (U, S)
    let v = VSolver::new(obs, &u, lambda)?.solve(obs, &u, &s)?;
    let solution = Solution {
        u,
        v,
        s,
        records: monitor.records[records_start..].to_vec(),
        status,
        iterations,
        probed_l_u: match config.mode {
            StepMode::Conservative { .. } => Some(if min_accepted_l_u.is_finite() {
                min_accepted_l_u
            } else {
                l_u
            }),
            StepMode::Practical => None,
        },
    };
    Ok(InnerOutcome { solution })
}

/// Jacobi iteration (Algorithm-1 order): S and U steps both use the V solved
/// at (U^k, S^k).
pub fn manpg_solve(
    problem: ProblemInstance<'_>,
    config: &SolverConfig,
    u0: GrassmannPoint,
    s0: SparseOnOmega,
) -> Result<Solution> {
    let mut monitor = Monitor::new();
    manpg_solve_with_monitor(problem, config, u0, s0, &mut monitor)
}

pub fn manpg_solve_with_monitor(
    problem: ProblemInstance<'_>,
    config: &SolverConfig,
    u0: GrassmannPoint,
    s0: SparseOnOmega,
    monitor: &mut Monitor<'_>,
) -> Result<Solution> {
    Ok(solve_loop(Algorithm::ManPg, problem, config, u0, s0, monitor)?.solution)
}

/// Gauss-Seidel iteration (Algorithm-2 order): V is re-solved at
/// (U^k, S^{k+1}) before the U step.
pub fn amanpg_solve(
    problem: ProblemInstance<'_>,
    config: &SolverConfig,
    u0: GrassmannPoint,
    s0: SparseOnOmega,
) -> Result<Solution> {
    let mut monitor = Monitor::new();
    amanpg_solve_with_monitor(problem, config, u0, s0, &mut monitor)
}

pub fn amanpg_solve_with_monitor(
    problem: ProblemInstance<'_>,
    config: &SolverConfig,
    u0: GrassmannPoint,
    s0: SparseOnOmega,
    monitor: &mut Monitor<'_>,
) -> Result<Solution> {
    Ok(solve_loop(Algorithm::AManPg, problem, config, u0, s0, monitor)?.solution)
}

/// Continuation wrapper: solves a sequence of problems with geometrically
/// shrinking γ and ε, warm-starting each round from the previous output.
pub fn continuation_solve(
    algo: Algorithm,
    problem: ProblemInstance<'_>,
    schedule: &ContinuationSchedule,
    config: &SolverConfig,
    u0: GrassmannPoint,
    s0: SparseOnOmega,
    monitor: &mut Monitor<'_>,
) -> Result<Solution> {
    schedule.validate()?;
    let records_start = monitor.records.len();
    let mut gamma = schedule.gamma0;
    let mut epsilon = schedule.epsilon0;
    let mut u = u0;
    let mut s = s0;
    let mut last: Option<Solution> = None;
    let mut total_iterations = 0;
    let mut probed: Option<f64> = None;

    // relative slack so accumulated mu1 rounding cannot add a spurious round
    while gamma > schedule.gamma_min * (1.0 + 1e-9) {
        let round_config = SolverConfig {
            tol: TolSpec::RawSq(epsilon * epsilon),
            ..*config
        };
        monitor.reset_stability();
        let sol = solve_loop(
            algo,
            problem.with_gamma(gamma),
            &round_config,
            u,
            s,
            monitor,
        )?
        .solution;
        u = sol.u.clone();
        s = sol.s.clone();
        total_iterations += sol.iterations;
        probed = match (probed, sol.probed_l_u) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        // a Stable round only ends that round: the stability rule sits on
        // top of the inner tolerance, and continuation still proceeds so the
        // l1 weight reaches its floor before the run reports Stable
        last = Some(sol);
        gamma *= schedule.mu1;
        epsilon *= schedule.mu2;
    }

    match last {
        Some(mut sol) => {
            sol.records = monitor.records[records_start..].to_vec();
            sol.iterations = total_iterations;
            sol.probed_l_u = probed;
            Ok(sol)
        }
        None => {
            // empty while loop: return the inputs with V solved once
            let v = VSolver::new(problem.obs, &u, problem.lambda)?
                .solve(problem.obs, &u, &s)?;
            Ok(Solution {
                u,
                v,
                s,
                records: Vec::new(),
                status: Status::Converged,
                iterations: 0,
                probed_l_u: None,
            })
        }
    }
}

/// AManPG with continuation, the paper's headline method.
pub fn amanpgc_solve(
    problem: ProblemInstance<'_>,
    schedule: &ContinuationSchedule,
    config: &SolverConfig,
    u0: GrassmannPoint,
    s0: SparseOnOmega,
) -> Result<Solution> {
    let mut monitor = Monitor::new();
    continuation_solve(Algorithm::AManPg, problem, schedule, config, u0, s0, &mut monitor)
}
