//! Solvers built on the steered conjugate-directions engine.

use super::engine::ScdEngine;
use super::{
    composite_objective, rel_change, rel_error_opt, ConvergenceRecord, IterateSnapshot,
    IterationRow, ProblemDims, SolveOptions, SolveOutcome, SolverState, StopReason,
};
use crate::error::CcdError;
use crate::linalg::{self, dist2};
use crate::operators::{stack, CountingOperator, LinearOperator, OpCounter};
use crate::proximal::shrink_in_place;

fn zero_outcome(n: usize, k_dim: usize) -> SolveOutcome {
    SolveOutcome {
        state: SolverState {
            u: vec![0.0; n],
            z: vec![0.0; k_dim],
            b: vec![0.0; k_dim],
            iteration: 0,
        },
        record: ConvergenceRecord {
            rows: Vec::new(),
            stop: Some(StopReason::Budget),
        },
        history: Vec::new(),
        directions: None,
    }
}

/// Steered conjugate directions for `min ‖F u − v_k‖₂` with an arbitrary
/// iteration-indexed right-hand-side sequence.
///
/// `rhs(k)` must yield the right-hand side for iteration `k`; it is called
/// once per index starting from 0. Operator counts in the record refer to
/// applications of `f_op` itself. The record's objective column is the
/// squared residual norm `‖v_{k+1} − F u_{k+1}‖₂²`.
pub fn scd_solve(
    f_op: &dyn LinearOperator,
    mut rhs: impl FnMut(usize) -> Vec<f64>,
    opts: &SolveOptions,
) -> Result<SolveOutcome, CcdError> {
    if let Some(truth) = &opts.truth {
        if truth.len() != f_op.n_in() {
            return Err(CcdError::DimensionMismatch {
                context: "truth vector",
                expected: f_op.n_in(),
                actual: truth.len(),
            });
        }
    }
    let counter = OpCounter::new(opts.budget);
    let counting_f = CountingOperator::new(f_op, counter.clone());
    let n = f_op.n_in();
    if !counter.fits(2) {
        return Ok(zero_outcome(n, 0));
    }
    let check_len = |v: &Vec<f64>| -> Result<(), CcdError> {
        if v.len() != f_op.n_out() {
            return Err(CcdError::DimensionMismatch {
                context: "right-hand side from provider",
                expected: f_op.n_out(),
                actual: v.len(),
            });
        }
        Ok(())
    };
    let v0 = rhs(0);
    check_len(&v0)?;
    let mut engine = ScdEngine::new(&counting_f, v0, None)?;

    let mut u = vec![0.0; n];
    let mut record = ConvergenceRecord::default();
    let mut history = Vec::new();
    let mut iteration = 0;

    while iteration < opts.max_iters {
        if !counter.fits(2) {
            record.stop = Some(StopReason::Budget);
            break;
        }
        let u_next = engine.compute_solution().to_vec();
        let v_next = rhs(iteration + 1);
        check_len(&v_next)?;
        let step = engine.update_directions(v_next);

        iteration += 1;
        let change = rel_change(&u_next, &u);
        record.rows.push(IterationRow {
            iteration,
            ops_a: counter.n_apply(),
            ops_at: counter.n_apply_adjoint(),
            objective: step.residual_norm_sq,
            primal_residual: None,
            rel_change: change,
            rel_error: rel_error_opt(opts.truth.as_deref(), &u_next),
        });
        u = u_next;
        if opts.keep_history {
            history.push(IterateSnapshot {
                u: u.clone(),
                z: Vec::new(),
                b: Vec::new(),
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
            z: Vec::new(),
            b: Vec::new(),
            iteration,
        },
        record,
        history,
        directions: Some(engine.into_store()),
    })
}

fn ccd_impl(
    a_op: &dyn LinearOperator,
    b_op: &dyn LinearOperator,
    d: &[f64],
    alpha: f64,
    lambda: f64,
    memory: Option<usize>,
    opts: &SolveOptions,
) -> Result<SolveOutcome, CcdError> {
    ProblemDims::validate(a_op, b_op, d, alpha, lambda, opts)?;
    let counter = OpCounter::new(opts.budget);
    let counting_a = CountingOperator::new(a_op, counter.clone());
    let f = stack(&counting_a as &dyn LinearOperator, b_op, alpha, lambda)?;

    let n = a_op.n_in();
    let k_dim = b_op.n_out();
    if !counter.fits(2) {
        return Ok(zero_outcome(n, k_dim));
    }

    let mut z = vec![0.0; k_dim];
    let mut b = vec![0.0; k_dim];
    let g: Vec<f64> = vec![0.0; k_dim];
    let v0 = f.stacked_rhs(d, &g);
    let mut engine = ScdEngine::new(&f, v0, memory)?;

    let mut u = vec![0.0; n];
    let mut record = ConvergenceRecord::default();
    let mut history = Vec::new();
    let mut iteration = 0;

    while iteration < opts.max_iters {
        if !counter.fits(2) {
            record.stop = Some(StopReason::Budget);
            break;
        }
        let u_next = engine.compute_solution().to_vec();

        let bu = b_op.apply_vec(&u_next);
        let mut z_next: Vec<f64> = bu.iter().zip(&b).map(|(v, bi)| v - bi).collect();
        shrink_in_place(&mut z_next, 1.0 / lambda);
        for ((bi, zi), bui) in b.iter_mut().zip(&z_next).zip(&bu) {
            *bi += zi - bui;
        }
        let g: Vec<f64> = z_next.iter().zip(&b).map(|(zi, bi)| zi + bi).collect();
        let v_next = f.stacked_rhs(d, &g);
        engine.update_directions(v_next);

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
        directions: Some(engine.into_store()),
    })
}

/// Compressive conjugate directions: the ADMM outer iteration with the
/// inner least-squares step handled by direction recycling. All directions
/// are kept, so each iteration refits the model over everything built so
/// far; exactly one application of `A` and of `Aᵀ` per outer iteration.
pub fn ccd_solve(
    a_op: &dyn LinearOperator,
    b_op: &dyn LinearOperator,
    d: &[f64],
    alpha: f64,
    lambda: f64,
    opts: &SolveOptions,
) -> Result<SolveOutcome, CcdError> {
    ccd_impl(a_op, b_op, d, alpha, lambda, None, opts)
}

/// Limited-memory compressive conjugate directions: keeps the freshest
/// `memory_m + 1` direction pairs in a circular buffer and freezes evicted
/// contributions in running accumulators. With `memory_m` at least the
/// iteration count it reproduces [`ccd_solve`] exactly.
pub fn lmccd_solve(
    a_op: &dyn LinearOperator,
    b_op: &dyn LinearOperator,
    d: &[f64],
    alpha: f64,
    lambda: f64,
    memory_m: usize,
    opts: &SolveOptions,
) -> Result<SolveOutcome, CcdError> {
    ccd_impl(a_op, b_op, d, alpha, lambda, Some(memory_m), opts)
}

/// Steered conjugate directions combined with the method of multipliers for
/// the equality-constrained least-squares problem
/// `min ‖Au − d‖₂²  s.t.  Bu = c`.
///
/// Uses the stacked operator with `α = 1`; the multiplier update is
/// `b ← b + c − Bu`. The record's objective column is `‖Au − d‖₂²` and the
/// primal-residual column is the constraint violation `‖Bu − c‖₂`.
pub fn scd_mm_solve(
    a_op: &dyn LinearOperator,
    b_op: &dyn LinearOperator,
    d: &[f64],
    c_vec: &[f64],
    lambda: f64,
    opts: &SolveOptions,
) -> Result<SolveOutcome, CcdError> {
    ProblemDims::validate(a_op, b_op, d, 1.0, lambda, opts)?;
    if c_vec.len() != b_op.n_out() {
        return Err(CcdError::DimensionMismatch {
            context: "constraint vector",
            expected: b_op.n_out(),
            actual: c_vec.len(),
        });
    }
    let counter = OpCounter::new(opts.budget);
    let counting_a = CountingOperator::new(a_op, counter.clone());
    let f = stack(&counting_a as &dyn LinearOperator, b_op, 1.0, lambda)?;

    let n = a_op.n_in();
    let k_dim = b_op.n_out();
    if !counter.fits(2) {
        return Ok(zero_outcome(n, k_dim));
    }

    let mut b = vec![0.0; k_dim];
    let g: Vec<f64> = c_vec.to_vec();
    let v0 = f.stacked_rhs(d, &g);
    let mut engine = ScdEngine::new(&f, v0, None)?;

    let mut u = vec![0.0; n];
    let mut record = ConvergenceRecord::default();
    let mut history = Vec::new();
    let mut iteration = 0;

    while iteration < opts.max_iters {
        if !counter.fits(2) {
            record.stop = Some(StopReason::Budget);
            break;
        }
        let u_next = engine.compute_solution().to_vec();

        let bu = b_op.apply_vec(&u_next);
        for ((bi, ci), bui) in b.iter_mut().zip(c_vec).zip(&bu) {
            *bi += ci - bui;
        }
        let g: Vec<f64> = c_vec.iter().zip(&b).map(|(ci, bi)| ci + bi).collect();
        let v_next = f.stacked_rhs(d, &g);
        engine.update_directions(v_next);

        iteration += 1;
        let change = rel_change(&u_next, &u);
        let mut fit = a_op.apply_vec(&u_next);
        for (fi, di) in fit.iter_mut().zip(d) {
            *fi -= di;
        }
        record.rows.push(IterationRow {
            iteration,
            ops_a: counter.n_apply(),
            ops_at: counter.n_apply_adjoint(),
            objective: linalg::dot(&fit, &fit),
            primal_residual: Some(dist2(&bu, c_vec)),
            rel_change: change,
            rel_error: rel_error_opt(opts.truth.as_deref(), &u_next),
        });
        u = u_next;
        if opts.keep_history {
            history.push(IterateSnapshot {
                u: u.clone(),
                z: Vec::new(),
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
            z: Vec::new(),
            b,
            iteration,
        },
        record,
        history,
        directions: Some(engine.into_store()),
    })
}
