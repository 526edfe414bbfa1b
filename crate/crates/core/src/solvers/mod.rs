//! Outer iterations for the regularized least-squares problem
//! `min ‖Bu‖₁ + (α/2)‖Au − d‖₂²`.
//!
//! The ADMM family shares one skeleton: a least-squares update of the model
//! `u`, a shrinkage update of the auxiliary variable `z`, and a multiplier
//! update `b ← b + z − Bu`. The solvers differ only in how the inner
//! least-squares problem is attacked:
//!
//! - [`admm_exact`] factors the normal equations once and solves exactly;
//! - [`rcg_solve`] runs a fixed number of hot-restarted CGNE iterations;
//! - [`scd::ccd_solve`] and [`scd::lmccd_solve`] recycle conjugate
//!   directions across outer iterations (one A and one Aᵀ per iteration);
//! - [`ista_solve`] / [`fista_solve`] are proximal-gradient baselines for
//!   the L1-regularized problem (B = identity).
//!
//! Every solver meters its data-operator applications through an
//! [`OpCounter`]; diagnostics (objective, residuals, model error) are
//! computed against the raw operators and never count toward a budget.

mod engine;
mod scd;

pub use engine::{DirectionStore, ScdEngine, ScdStep};
pub use scd::{ccd_solve, lmccd_solve, scd_mm_solve, scd_solve};

use crate::error::CcdError;
use crate::krylov::{CgneState, NormalEquations};
use crate::linalg::{self, dist2, norm2};
use crate::operators::{
    max_normal_eigenvalue, stack, CountingOperator, LinearOperator, OpCounter,
};
use crate::proximal::shrink_in_place;

/// Consecutive objective increases before a proximal-gradient run is flagged
/// as divergent (step size too large for the operator's Lipschitz constant).
const DIVERGENCE_RUN: usize = 10;

/// Power iterations used to estimate the default ISTA/FISTA step size.
const STEP_POWER_ITERS: usize = 100;

/// Shared solver options.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Maximum number of outer iterations.
    pub max_iters: usize,
    /// Relative-change stopping threshold `‖u_{k+1}−u_k‖/‖u_k‖`
    /// (absolute change when `‖u_k‖ = 0`).
    pub tol: f64,
    /// Cap on combined A and Aᵀ applications; a run always ends on a
    /// complete outer iteration within the cap.
    pub budget: Option<u64>,
    /// Reference model for the relative-error diagnostic column.
    pub truth: Option<Vec<f64>>,
    /// Record per-iteration `(u, z, b)` snapshots.
    pub keep_history: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            tol: 1e-8,
            budget: None,
            truth: None,
            keep_history: false,
        }
    }
}

impl SolveOptions {
    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }
    pub fn with_truth(mut self, truth: Vec<f64>) -> Self {
        self.truth = Some(truth);
        self
    }
    pub fn with_history(mut self) -> Self {
        self.keep_history = true;
        self
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Relative change fell below the tolerance.
    Converged,
    /// Iteration cap reached.
    MaxIters,
    /// The next outer iteration would have exceeded the operator budget.
    Budget,
    /// Objective grew for `DIVERGENCE_RUN` consecutive iterations.
    Diverged,
}

/// The ADMM triple after a run.
#[derive(Debug, Clone)]
pub struct SolverState {
    /// Model iterate (length N).
    pub u: Vec<f64>,
    /// Auxiliary variable, always the output of a shrink call (length K;
    /// empty for solvers without a z-update).
    pub z: Vec<f64>,
    /// Scaled multipliers (length K; empty where unused).
    pub b: Vec<f64>,
    /// Completed outer iterations.
    pub iteration: usize,
}

/// One row of per-iteration diagnostics.
#[derive(Debug, Clone)]
pub struct IterationRow {
    /// 1-based outer iteration index.
    pub iteration: usize,
    /// Cumulative forward applications of the data operator.
    pub ops_a: u64,
    /// Cumulative adjoint applications of the data operator.
    pub ops_at: u64,
    /// Problem objective at the current iterate.
    pub objective: f64,
    /// `‖z_k − B u_k‖₂` for ADMM-family solvers, `‖B u_k − c‖₂` for the
    /// constrained solver; `None` where the quantity is undefined.
    pub primal_residual: Option<f64>,
    /// `‖u_{k+1}−u_k‖₂/‖u_k‖₂` (absolute change when `‖u_k‖ = 0`).
    pub rel_change: f64,
    /// `‖u_k − u_true‖₂/‖u_true‖₂` when a reference model was supplied.
    pub rel_error: Option<f64>,
}

/// Full per-iteration log of a run.
#[derive(Debug, Clone, Default)]
pub struct ConvergenceRecord {
    pub rows: Vec<IterationRow>,
    pub stop: Option<StopReason>,
}

impl ConvergenceRecord {
    pub fn converged(&self) -> bool {
        self.stop == Some(StopReason::Converged)
    }
    pub fn diverged(&self) -> bool {
        self.stop == Some(StopReason::Diverged)
    }
    pub fn last(&self) -> Option<&IterationRow> {
        self.rows.last()
    }
}

/// Snapshot of the ADMM triple after one outer iteration.
#[derive(Debug, Clone)]
pub struct IterateSnapshot {
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    pub b: Vec<f64>,
}

/// Result of a solver run.
pub struct SolveOutcome {
    pub state: SolverState,
    pub record: ConvergenceRecord,
    /// Per-iteration snapshots; populated when `keep_history` is set.
    pub history: Vec<IterateSnapshot>,
    /// The conjugate-direction store of SCD-family runs.
    pub directions: Option<DirectionStore>,
}

impl SolveOutcome {
    pub fn u(&self) -> &[f64] {
        &self.state.u
    }
}

pub(crate) fn rel_change(u_new: &[f64], u_old: &[f64]) -> f64 {
    let denom = norm2(u_old);
    let change = dist2(u_new, u_old);
    if denom > 0.0 {
        change / denom
    } else {
        change
    }
}

pub(crate) fn rel_error_opt(truth: Option<&[f64]>, u: &[f64]) -> Option<f64> {
    truth.map(|t| dist2(u, t) / norm2(t))
}

/// `‖Bu‖₁ + (α/2)‖Au − d‖₂²`, with `B = I` when `b_op` is `None`.
/// Evaluated on raw operators; never counted.
pub(crate) fn composite_objective(
    a_op: &dyn LinearOperator,
    b_op: Option<&dyn LinearOperator>,
    d: &[f64],
    alpha: f64,
    u: &[f64],
) -> f64 {
    let l1 = match b_op {
        Some(b) => linalg::norm1(&b.apply_vec(u)),
        None => linalg::norm1(u),
    };
    let mut r = a_op.apply_vec(u);
    for (ri, di) in r.iter_mut().zip(d) {
        *ri -= di;
    }
    l1 + 0.5 * alpha * linalg::dot(&r, &r)
}

pub(crate) struct ProblemDims;

impl ProblemDims {
    pub(crate) fn validate(
        a_op: &dyn LinearOperator,
        b_op: &dyn LinearOperator,
        d: &[f64],
        alpha: f64,
        lambda: f64,
        opts: &SolveOptions,
    ) -> Result<(), CcdError> {
        if d.len() != a_op.n_out() {
            return Err(CcdError::DimensionMismatch {
                context: "data vector",
                expected: a_op.n_out(),
                actual: d.len(),
            });
        }
        if b_op.n_in() != a_op.n_in() {
            return Err(CcdError::DimensionMismatch {
                context: "regularization operator domain",
                expected: a_op.n_in(),
                actual: b_op.n_in(),
            });
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(CcdError::InvalidParameter(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(CcdError::InvalidParameter(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        if let Some(truth) = &opts.truth {
            if truth.len() != a_op.n_in() {
                return Err(CcdError::DimensionMismatch {
                    context: "truth vector",
                    expected: a_op.n_in(),
                    actual: truth.len(),
                });
            }
        }
        Ok(())
    }
}

/// Exact ADMM: the inner least-squares step is solved by a dense
/// factorization of `FᵀF`, computed once and reused across iterations.
///
/// This is the reference the conjugate-direction solvers are measured
/// against. It performs no matrix-free applications of `A` inside the loop,
/// so its operator-count columns stay at zero.
pub fn admm_exact(
    a_op: &dyn LinearOperator,
    b_op: &dyn LinearOperator,
    d: &[f64],
    alpha: f64,
    lambda: f64,
    opts: &SolveOptions,
) -> Result<SolveOutcome, CcdError> {
    ProblemDims::validate(a_op, b_op, d, alpha, lambda, opts)?;
    let f = stack(a_op, b_op, alpha, lambda)?;
    let normal = NormalEquations::new(&f)?;

    let n = a_op.n_in();
    let k_dim = b_op.n_out();
    let mut u = vec![0.0; n];
    let mut z = vec![0.0; k_dim];
    let mut b = vec![0.0; k_dim];

    // alpha * Aᵀ d is constant across iterations.
    let mut atd = a_op.apply_adjoint_vec(d);
    linalg::scale(alpha, &mut atd);

    let mut record = ConvergenceRecord::default();
    let mut history = Vec::new();
    let mut iteration = 0;

    while iteration < opts.max_iters {
        // rhs = alpha Aᵀd + lambda Bᵀ(z_k + b_k)
        let g: Vec<f64> = z.iter().zip(&b).map(|(zi, bi)| zi + bi).collect();
        let mut rhs = b_op.apply_adjoint_vec(&g);
        linalg::scale(lambda, &mut rhs);
        linalg::axpy(1.0, &atd, &mut rhs);
        let u_next = normal.solve_normal_rhs(&rhs);

        let bu = b_op.apply_vec(&u_next);
        let mut z_next: Vec<f64> = bu.iter().zip(&b).map(|(v, bi)| v - bi).collect();
        shrink_in_place(&mut z_next, 1.0 / lambda);
        for ((bi, zi), bui) in b.iter_mut().zip(&z_next).zip(&bu) {
            *bi += zi - bui;
        }

        iteration += 1;
        let change = rel_change(&u_next, &u);
        let rho = dist2(&z_next, &bu);
        record.rows.push(IterationRow {
            iteration,
            ops_a: 0,
            ops_at: 0,
            objective: composite_objective(a_op, Some(b_op), d, alpha, &u_next),
            primal_residual: Some(rho),
            rel_change: change,
            rel_error: rel_error_opt(opts.truth.as_deref(), &u_next),
        });
        u = u_next;
        z = z_next;
        if opts.keep_history {
            history.push(IterateSnapshot {
                u: u.clone(),
                z: z.clone(),
                b: b.clone(),
            });
        }
        if change <= opts.tol {
            record.stop = Some(StopReason::Converged);
            break;
        }
    }
    if record.stop.is_none() {
        record.stop = Some(StopReason::MaxIters);
    }

    Ok(SolveOutcome {
        state: SolverState {
            u,
            z,
            b,
            iteration,
        },
        record,
        history,
        directions: None,
    })
}

/// ADMM with hot-restarted CGNE (`RCG`): the inner least-squares problem is
/// attacked with exactly `n_cg` CGNE iterations started from the previous
/// model iterate.
///
/// Each outer iteration costs `n_cg + 1` applications of `A` and of `Aᵀ`:
/// one of each for the hot-start residual and gradient, one of each per
/// inner iteration.
pub fn rcg_solve(
    a_op: &dyn LinearOperator,
    b_op: &dyn LinearOperator,
    d: &[f64],
    alpha: f64,
    lambda: f64,
    n_cg: usize,
    opts: &SolveOptions,
) -> Result<SolveOutcome, CcdError> {
    ProblemDims::validate(a_op, b_op, d, alpha, lambda, opts)?;
    if n_cg == 0 {
        return Err(CcdError::InvalidParameter(
            "rcg needs at least one inner CGNE iteration".into(),
        ));
    }
    let counter = OpCounter::new(opts.budget);
    let counting_a = CountingOperator::new(a_op, counter.clone());
    let f = stack(&counting_a as &dyn LinearOperator, b_op, alpha, lambda)?;

    let n = a_op.n_in();
    let k_dim = b_op.n_out();
    let mut u = vec![0.0; n];
    let mut z = vec![0.0; k_dim];
    let mut b = vec![0.0; k_dim];

    let cost_per_iter = 2 * (n_cg as u64 + 1);
    let mut record = ConvergenceRecord::default();
    let mut history = Vec::new();
    let mut iteration = 0;

    while iteration < opts.max_iters {
        if !counter.fits(cost_per_iter) {
            record.stop = Some(StopReason::Budget);
            break;
        }
        let g: Vec<f64> = z.iter().zip(&b).map(|(zi, bi)| zi + bi).collect();
        let v = f.stacked_rhs(d, &g);
        let mut inner = CgneState::new(&f, &v, &u)?;
        for _ in 0..n_cg {
            if !inner.step() {
                break;
            }
        }
        let u_next = inner.x;

        let bu = b_op.apply_vec(&u_next);
        let mut z_next: Vec<f64> = bu.iter().zip(&b).map(|(v, bi)| v - bi).collect();
        shrink_in_place(&mut z_next, 1.0 / lambda);
        for ((bi, zi), bui) in b.iter_mut().zip(&z_next).zip(&bu) {
            *bi += zi - bui;
        }

        iteration += 1;
        let change = rel_change(&u_next, &u);
        record.rows.push(IterationRow {
            iteration,
            ops_a: counter.n_apply(),
            ops_at: counter.n_apply_adjoint(),
            objective: composite_objective(a_op, Some(b_op), d, alpha, &u_next),
            primal_residual: Some(dist2(&z_next, &bu)),
            rel_change: change,
            rel_error: rel_error_opt(opts.truth.as_deref(), &u_next),
        });
        u = u_next;
        z = z_next;
        if opts.keep_history {
            history.push(IterateSnapshot {
                u: u.clone(),
                z: z.clone(),
                b: b.clone(),
            });
        }
        if change <= opts.tol {
            record.stop = Some(StopReason::Converged);
            break;
        }
    }
    if record.stop.is_none() {
        record.stop = Some(StopReason::MaxIters);
    }

    Ok(SolveOutcome {
        state: SolverState {
            u,
            z,
            b,
            iteration,
        },
        record,
        history,
        directions: None,
    })
}

/// Default proximal-gradient step: `0.95 / (alpha * σ̂_max(A)²)` with the
/// largest singular value estimated by power iteration on `AᵀA`.
/// The estimation runs on the raw operator and is never counted.
pub fn default_prox_step(a_op: &dyn LinearOperator, alpha: f64) -> f64 {
    let sigma_sq = max_normal_eigenvalue(a_op, STEP_POWER_ITERS, 0x5eed);
    0.95 / (alpha * sigma_sq)
}

/// State of a FISTA run, advanced one iteration at a time.
///
/// `u` is the extrapolated point the gradient is evaluated at; `y_prev` is
/// the previous thresholded iterate the momentum is formed from.
pub struct FistaState {
    pub u: Vec<f64>,
    pub y_prev: Vec<f64>,
    pub zeta: f64,
    pub gamma: f64,
}

impl FistaState {
    pub fn new(n: usize, gamma: f64) -> Self {
        Self {
            u: vec![0.0; n],
            y_prev: vec![0.0; n],
            zeta: 1.0,
            gamma,
        }
    }

    /// One FISTA iteration; returns the new thresholded iterate. Costs one
    /// forward and one adjoint application of `a_op`.
    pub fn step(&mut self, a_op: &dyn LinearOperator, d: &[f64], alpha: f64) -> Vec<f64> {
        let mut r = a_op.apply_vec(&self.u);
        for (ri, di) in r.iter_mut().zip(d) {
            *ri -= di;
        }
        let g = a_op.apply_adjoint_vec(&r);
        let mut y = self.u.clone();
        linalg::axpy(-self.gamma * alpha, &g, &mut y);
        shrink_in_place(&mut y, self.gamma);

        let zeta_next = 0.5 * (1.0 + (1.0 + 4.0 * self.zeta * self.zeta).sqrt());
        let relax = (self.zeta - 1.0) / zeta_next;
        self.u = y
            .iter()
            .zip(&self.y_prev)
            .map(|(yi, pi)| yi + relax * (yi - pi))
            .collect();
        self.zeta = zeta_next;
        self.y_prev = y.clone();
        y
    }
}

fn prox_gradient_solve(
    a_op: &dyn LinearOperator,
    d: &[f64],
    alpha: f64,
    gamma: Option<f64>,
    opts: &SolveOptions,
    accelerated: bool,
) -> Result<SolveOutcome, CcdError> {
    if d.len() != a_op.n_out() {
        return Err(CcdError::DimensionMismatch {
            context: "data vector",
            expected: a_op.n_out(),
            actual: d.len(),
        });
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(CcdError::InvalidParameter(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    let gamma = match gamma {
        Some(g) if g > 0.0 && g.is_finite() => g,
        Some(g) => {
            return Err(CcdError::InvalidParameter(format!(
                "step size must be positive and finite, got {g}"
            )))
        }
        None => default_prox_step(a_op, alpha),
    };
    if let Some(truth) = &opts.truth {
        if truth.len() != a_op.n_in() {
            return Err(CcdError::DimensionMismatch {
                context: "truth vector",
                expected: a_op.n_in(),
                actual: truth.len(),
            });
        }
    }

    let counter = OpCounter::new(opts.budget);
    let counting_a = CountingOperator::new(a_op, counter.clone());

    let n = a_op.n_in();
    let mut fista = FistaState::new(n, gamma);
    let mut x = vec![0.0; n];

    let mut record = ConvergenceRecord::default();
    let mut history = Vec::new();
    let mut iteration = 0;
    let mut prev_objective = f64::INFINITY;
    let mut increase_run = 0usize;

    while iteration < opts.max_iters {
        if !counter.fits(2) {
            record.stop = Some(StopReason::Budget);
            break;
        }
        let x_next = if accelerated {
            fista.step(&counting_a, d, alpha)
        } else {
            // ISTA: plain gradient step at the current iterate, then shrink.
            let mut r = counting_a.apply_vec(&x);
            for (ri, di) in r.iter_mut().zip(d) {
                *ri -= di;
            }
            let g = counting_a.apply_adjoint_vec(&r);
            let mut y = x.clone();
            linalg::axpy(-gamma * alpha, &g, &mut y);
            shrink_in_place(&mut y, gamma);
            y
        };

        iteration += 1;
        let change = rel_change(&x_next, &x);
        let objective = composite_objective(a_op, None, d, alpha, &x_next);
        record.rows.push(IterationRow {
            iteration,
            ops_a: counter.n_apply(),
            ops_at: counter.n_apply_adjoint(),
            objective,
            primal_residual: None,
            rel_change: change,
            rel_error: rel_error_opt(opts.truth.as_deref(), &x_next),
        });
        x = x_next;
        if opts.keep_history {
            history.push(IterateSnapshot {
                u: x.clone(),
                z: Vec::new(),
                b: Vec::new(),
            });
        }

        // Divergence watch (ISTA only): a sustained objective climb means
        // the step exceeds 2/L and the iteration cannot recover.
        if !accelerated {
            if objective > prev_objective {
                increase_run += 1;
                if increase_run >= DIVERGENCE_RUN {
                    record.stop = Some(StopReason::Diverged);
                    break;
                }
            } else {
                increase_run = 0;
            }
        }
        prev_objective = objective;

        if change <= opts.tol {
            record.stop = Some(StopReason::Converged);
            break;
        }
    }
    if record.stop.is_none() {
        record.stop = Some(StopReason::MaxIters);
    }

    Ok(SolveOutcome {
        state: SolverState {
            u: x,
            z: Vec::new(),
            b: Vec::new(),
            iteration,
        },
        record,
        history,
        directions: None,
    })
}

/// Iterative shrinkage-thresholding for `min ‖u‖₁ + (α/2)‖Au − d‖₂²`:
/// `u_{k+1} = shrink(u_k − γα Aᵀ(A u_k − d), γ)`.
///
/// `gamma = None` picks the default step from [`default_prox_step`].
/// A sustained objective increase stops the run with
/// [`StopReason::Diverged`].
pub fn ista_solve(
    a_op: &dyn LinearOperator,
    d: &[f64],
    alpha: f64,
    gamma: Option<f64>,
    opts: &SolveOptions,
) -> Result<SolveOutcome, CcdError> {
    prox_gradient_solve(a_op, d, alpha, gamma, opts, false)
}

/// FISTA for `min ‖u‖₁ + (α/2)‖Au − d‖₂²`: the shrinkage iteration with
/// Nesterov over-relaxation of the thresholded iterates,
/// `ζ_{k+1} = (1 + √(1+4ζ_k²))/2`, `ζ_1 = 1`.
pub fn fista_solve(
    a_op: &dyn LinearOperator,
    d: &[f64],
    alpha: f64,
    gamma: Option<f64>,
    opts: &SolveOptions,
) -> Result<SolveOutcome, CcdError> {
    prox_gradient_solve(a_op, d, alpha, gamma, opts, true)
}
