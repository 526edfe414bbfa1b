//! Inner least-squares solvers: CGNE and a direct normal-equations solver.
//!
//! CGNE runs conjugate gradients on `FᵀF u = Fᵀv` without forming `FᵀF`;
//! each iteration costs exactly one forward and one adjoint application of
//! `F`, plus one of each for the starting residual and gradient. The direct
//! solver materializes `FᵀF`, factors it once, and serves both as the exact
//! inner step of ADMM and as a high-accuracy reference.

use crate::error::CcdError;
use crate::linalg::{self, Cholesky};
use crate::operators::{materialize_normal, LinearOperator};

/// Relative breakdown threshold for the CGNE search direction: once the
/// squared image norm `‖F p‖²` falls below this fraction of its initial
/// value the direction carries no information and the solve returns early.
const CGNE_BREAKDOWN_REL: f64 = 1e-28;

/// Largest domain dimension for which `FᵀF` is materialized densely.
const MAX_DIRECT_DIM: usize = 4096;

/// State of a CGNE solve, advanced one iteration at a time.
pub struct CgneState<'a> {
    f_op: &'a dyn LinearOperator,
    /// Current iterate in model space.
    pub x: Vec<f64>,
    /// Residual `v - F x` in stacked data space.
    pub r: Vec<f64>,
    /// Search direction in model space.
    pub p: Vec<f64>,
    /// Iterations taken so far.
    pub iteration: usize,
    g_dot_g: f64,
    first_image_sq: Option<f64>,
    done: bool,
}

impl<'a> CgneState<'a> {
    /// Starts a CGNE solve of `min ‖F x − v‖₂` from `x0`.
    ///
    /// Costs one forward application (the hot-start residual) and one adjoint
    /// application (the initial gradient).
    pub fn new(f_op: &'a dyn LinearOperator, v: &[f64], x0: &[f64]) -> Result<Self, CcdError> {
        if v.len() != f_op.n_out() {
            return Err(CcdError::DimensionMismatch {
                context: "CGNE right-hand side",
                expected: f_op.n_out(),
                actual: v.len(),
            });
        }
        if x0.len() != f_op.n_in() {
            return Err(CcdError::DimensionMismatch {
                context: "CGNE starting iterate",
                expected: f_op.n_in(),
                actual: x0.len(),
            });
        }
        let mut r = f_op.apply_vec(x0);
        for (ri, vi) in r.iter_mut().zip(v) {
            *ri = vi - *ri;
        }
        let g = f_op.apply_adjoint_vec(&r);
        let g_dot_g = linalg::dot(&g, &g);
        Ok(Self {
            f_op,
            x: x0.to_vec(),
            r,
            p: g,
            iteration: 0,
            g_dot_g,
            first_image_sq: None,
            done: g_dot_g == 0.0,
        })
    }

    /// True once the direction has broken down or the gradient vanished.
    pub fn converged(&self) -> bool {
        self.done
    }

    /// One CGNE iteration: one forward and one adjoint application of `F`.
    /// Returns false without applying the operator when already converged.
    pub fn step(&mut self) -> bool {
        if self.done {
            return false;
        }
        let q = self.f_op.apply_vec(&self.p);
        let image_sq = linalg::dot(&q, &q);
        let scale = *self.first_image_sq.get_or_insert(image_sq);
        if image_sq <= CGNE_BREAKDOWN_REL * scale {
            self.done = true;
            return false;
        }
        let step = self.g_dot_g / image_sq;
        linalg::axpy(step, &self.p, &mut self.x);
        linalg::axpy(-step, &q, &mut self.r);
        let g = self.f_op.apply_adjoint_vec(&self.r);
        let g_new = linalg::dot(&g, &g);
        if g_new == 0.0 {
            self.done = true;
        }
        let beta = g_new / self.g_dot_g;
        for (pi, gi) in self.p.iter_mut().zip(&g) {
            *pi = gi + beta * *pi;
        }
        self.g_dot_g = g_new;
        self.iteration += 1;
        true
    }
}

/// Runs `n_iters` CGNE iterations for `min ‖F x − v‖₂` starting from `x0`;
/// returns early when the search direction degenerates.
pub fn cgne_solve(
    f_op: &dyn LinearOperator,
    v: &[f64],
    x0: &[f64],
    n_iters: usize,
) -> Result<Vec<f64>, CcdError> {
    if n_iters == 0 {
        return Err(CcdError::InvalidParameter(
            "cgne_solve needs at least one iteration".into(),
        ));
    }
    let mut state = CgneState::new(f_op, v, x0)?;
    for _ in 0..n_iters {
        if !state.step() {
            break;
        }
    }
    Ok(state.x)
}

/// Factored normal equations `FᵀF u = Fᵀ v` of a stacked operator.
///
/// Materializing and factoring once lets the exact ADMM reuse the factor
/// across outer iterations, since `F` never changes between them.
pub struct NormalEquations<'a> {
    f_op: &'a dyn LinearOperator,
    chol: Cholesky,
}

impl<'a> NormalEquations<'a> {
    pub fn new(f_op: &'a dyn LinearOperator) -> Result<Self, CcdError> {
        let n = f_op.n_in();
        if n > MAX_DIRECT_DIM {
            return Err(CcdError::InvalidParameter(format!(
                "direct solver materializes FᵀF; domain dimension {n} exceeds the {MAX_DIRECT_DIM} limit"
            )));
        }
        let ftf = materialize_normal(f_op);
        let chol = Cholesky::factor(&ftf)?;
        Ok(Self { f_op, chol })
    }

    /// Solves for the least-squares minimizer against the stacked RHS `v`.
    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>, CcdError> {
        if v.len() != self.f_op.n_out() {
            return Err(CcdError::DimensionMismatch {
                context: "direct least-squares right-hand side",
                expected: self.f_op.n_out(),
                actual: v.len(),
            });
        }
        let rhs = self.f_op.apply_adjoint_vec(v);
        Ok(self.solve_normal_rhs(&rhs))
    }

    /// Solves `FᵀF u = rhs` for an already-assembled normal-equations RHS.
    pub fn solve_normal_rhs(&self, rhs: &[f64]) -> Vec<f64> {
        self.chol.solve(rhs)
    }
}

/// One-shot direct solve of `min ‖F u − v‖₂` by dense symmetric
/// factorization of `FᵀF`. Errors on rank deficiency.
pub fn direct_ls_solve(f_op: &dyn LinearOperator, v: &[f64]) -> Result<Vec<f64>, CcdError> {
    NormalEquations::new(f_op)?.solve(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{dense_operator, dilat1d_kernel, stack, IdentityOperator};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_stack(
        rng: &mut ChaCha12Rng,
        rows: usize,
        cols: usize,
    ) -> crate::operators::DenseOperator {
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        dense_operator(rows, cols, data).unwrap()
    }

    #[test]
    fn cgne_identity_converges_in_one_step() {
        let a = IdentityOperator::new(4);
        let b = IdentityOperator::new(4);
        let f = stack(&a as &dyn LinearOperator, &b as &dyn LinearOperator, 1.0, 0.0).unwrap();
        let v = vec![1.0, -2.0, 0.5, 3.0, 0.0, 0.0, 0.0, 0.0];
        let x = cgne_solve(&f, &v, &[0.0; 4], 1).unwrap();
        for (xi, vi) in x.iter().zip(&v) {
            assert_relative_eq!(xi, vi, max_relative = 1e-14);
        }
    }

    #[test]
    fn cgne_matches_direct_least_squares() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let a = random_stack(&mut rng, 8, 5);
        let v: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = cgne_solve(&a, &v, &[0.0; 5], 5).unwrap();
        let x_direct = direct_ls_solve(&a, &v).unwrap();
        let err = linalg::dist2(&x, &x_direct) / linalg::norm2(&x_direct);
        assert!(err <= 1e-8, "CGNE after N iterations off by {err}");
    }

    #[test]
    fn cgne_fixed_point_at_exact_solution() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let a = random_stack(&mut rng, 7, 4);
        let v: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let exact = direct_ls_solve(&a, &v).unwrap();
        let x = cgne_solve(&a, &v, &exact, 3).unwrap();
        let drift = linalg::dist2(&x, &exact) / linalg::norm2(&exact);
        assert!(drift <= 1e-10, "exact solution drifted by {drift}");
    }

    #[test]
    fn cgne_zero_everything_terminates() {
        let a = IdentityOperator::new(3);
        let x = cgne_solve(&a, &[0.0; 3], &[0.0; 3], 10).unwrap();
        assert_eq!(x, vec![0.0; 3]);
    }

    #[test]
    fn direct_identity_returns_data() {
        let a = IdentityOperator::new(3);
        let b = IdentityOperator::new(3);
        let f = stack(&a as &dyn LinearOperator, &b as &dyn LinearOperator, 1.0, 0.0).unwrap();
        let u = direct_ls_solve(&f, &[2.0, -1.0, 0.5, 0.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(u[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(u[1], -1.0, max_relative = 1e-12);
        assert_relative_eq!(u[2], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn direct_matches_long_cgne_run() {
        let mut rng = ChaCha12Rng::seed_from_u64(33);
        let a = random_stack(&mut rng, 10, 6);
        let v: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let direct = direct_ls_solve(&a, &v).unwrap();
        let iterative = cgne_solve(&a, &v, &[0.0; 6], 50).unwrap();
        let err = linalg::dist2(&direct, &iterative) / linalg::norm2(&direct);
        assert!(err <= 1e-10, "solvers disagree by {err}");
    }

    #[test]
    fn direct_preserves_symmetry_of_symmetric_data() {
        // Symmetric kernel + symmetric data => mirror-symmetric solution.
        let n = 24;
        let a = dilat1d_kernel(n, n, 0.2, 1.0, 1.0).unwrap();
        let b = IdentityOperator::new(n);
        let f = stack(&a as &dyn LinearOperator, &b as &dyn LinearOperator, 1.0, 0.1).unwrap();
        let d: Vec<f64> = (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) / n as f64 - 0.5;
                (-20.0 * t * t).exp()
            })
            .collect();
        let zeros = vec![0.0; n];
        let v = f.stacked_rhs(&d, &zeros);
        let u = f.apply_adjoint_vec(&v);
        let sol = NormalEquations::new(&f).unwrap().solve_normal_rhs(&u);
        for i in 0..n {
            assert_relative_eq!(sol[i], sol[n - 1 - i], max_relative = 1e-8, epsilon = 1e-12);
        }
    }

    #[test]
    fn direct_reports_rank_deficiency() {
        // A has a zero column and B = 0-weight block: FᵀF singular.
        let a = dense_operator(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let b = IdentityOperator::new(2);
        let f = stack(&a as &dyn LinearOperator, &b as &dyn LinearOperator, 1.0, 0.0).unwrap();
        assert!(matches!(
            direct_ls_solve(&f, &[1.0, 1.0, 0.0, 0.0]),
            Err(CcdError::RankDeficient { .. })
        ));
    }

    #[test]
    fn cgne_finite_termination_small_instances() {
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        for trial in 0..10 {
            let n = rng.gen_range(3..=20);
            let m = 2 * n + rng.gen_range(2..=10);
            let a = random_stack(&mut rng, m, n);
            let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let direct = direct_ls_solve(&a, &v).unwrap();
            let x = cgne_solve(&a, &v, &vec![0.0; n], n).unwrap();
            let err = linalg::dist2(&x, &direct) / linalg::norm2(&direct);
            assert!(err <= 1e-8, "trial {trial}: N-step CGNE error {err}");
        }
    }
}
