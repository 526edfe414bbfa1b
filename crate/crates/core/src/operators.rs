//! Matrix-free linear operators.
//!
//! An operator is anything that can apply itself and its adjoint to a vector.
//! The solvers never look inside: dense matrices, finite-difference stencils
//! and quadrature kernels all hide behind [`LinearOperator`]. The stacked
//! operator `F = [√α·A; √λ·B]` combines the data operator with the
//! regularization operator, and [`CountingOperator`] wraps the data operator
//! so a run's cost in A/Aᵀ applications can be metered against a budget.
//!
//! Operators are immutable after construction and safe to share across
//! threads for read-only application; the counters use atomics.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;

use crate::error::CcdError;
use crate::linalg::{self, DenseMatrix};

/// A linear map `R^n_in -> R^n_out` with an adjoint.
///
/// `apply`/`apply_adjoint` write into caller-provided slices and expect exact
/// lengths; the `_checked` variants validate lengths and report mismatches.
pub trait LinearOperator: Sync {
    /// Domain dimension (model space, N).
    fn n_in(&self) -> usize;
    /// Range dimension (data space).
    fn n_out(&self) -> usize;
    /// `y = A x` with `x.len() == n_in`, `y.len() == n_out`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// `x = Aᵀ y` with `y.len() == n_out`, `x.len() == n_in`.
    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]);

    /// Allocating convenience wrapper around `apply`.
    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_out()];
        self.apply(x, &mut y);
        y
    }

    /// Allocating convenience wrapper around `apply_adjoint`.
    fn apply_adjoint_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_in()];
        self.apply_adjoint(y, &mut x);
        x
    }

    /// Length-validated forward application.
    fn apply_checked(&self, x: &[f64]) -> Result<Vec<f64>, CcdError> {
        if x.len() != self.n_in() {
            return Err(CcdError::DimensionMismatch {
                context: "operator apply",
                expected: self.n_in(),
                actual: x.len(),
            });
        }
        Ok(self.apply_vec(x))
    }

    /// Length-validated adjoint application.
    fn apply_adjoint_checked(&self, y: &[f64]) -> Result<Vec<f64>, CcdError> {
        if y.len() != self.n_out() {
            return Err(CcdError::DimensionMismatch {
                context: "operator adjoint apply",
                expected: self.n_out(),
                actual: y.len(),
            });
        }
        Ok(self.apply_adjoint_vec(y))
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn n_in(&self) -> usize {
        (**self).n_in()
    }
    fn n_out(&self) -> usize {
        (**self).n_out()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]) {
        (**self).apply_adjoint(y, x)
    }
}

/// Identity map on `R^n`; the data operator of the denoising problem.
#[derive(Debug, Clone)]
pub struct IdentityOperator {
    n: usize,
}

impl IdentityOperator {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl LinearOperator for IdentityOperator {
    fn n_in(&self) -> usize {
        self.n
    }
    fn n_out(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]) {
        x.copy_from_slice(y);
    }
}

/// Dense matrix as an operator; apply is the matrix-vector product and the
/// adjoint is the transpose product.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    matrix: DenseMatrix,
}

/// Wraps an `M x N` dense matrix (row-major) as an operator.
pub fn dense_operator(rows: usize, cols: usize, data: Vec<f64>) -> Result<DenseOperator, CcdError> {
    if rows == 0 || cols == 0 {
        return Err(CcdError::InvalidParameter(
            "dense operator needs at least one row and one column".into(),
        ));
    }
    Ok(DenseOperator {
        matrix: DenseMatrix::from_rows(rows, cols, data)?,
    })
}

impl DenseOperator {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }
}

impl LinearOperator for DenseOperator {
    fn n_in(&self) -> usize {
        self.matrix.cols()
    }
    fn n_out(&self) -> usize {
        self.matrix.rows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.matvec(x, y);
    }
    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]) {
        self.matrix.matvec_t(y, x);
    }
}

/// First-order forward difference on a 1-D grid: `(Bu)_i = u_{i+1} - u_i`.
///
/// Maps `R^n -> R^{n-1}`; the TV regularizer of 1-D problems.
#[derive(Debug, Clone)]
pub struct Diff1d {
    n: usize,
}

pub fn diff1d(n: usize) -> Result<Diff1d, CcdError> {
    if n < 2 {
        return Err(CcdError::InvalidParameter(format!(
            "diff1d needs n >= 2, got {n}"
        )));
    }
    Ok(Diff1d { n })
}

impl LinearOperator for Diff1d {
    fn n_in(&self) -> usize {
        self.n
    }
    fn n_out(&self) -> usize {
        self.n - 1
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n - 1 {
            y[i] = x[i + 1] - x[i];
        }
    }
    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]) {
        x.fill(0.0);
        for i in 0..self.n - 1 {
            x[i] -= y[i];
            x[i + 1] += y[i];
        }
    }
}

/// Anisotropic 2-D gradient on a row-major `ny x nx` grid.
///
/// Output stacks all x-differences first, then all y-differences, each block
/// in row-major scan order, so `n_out = ny*(nx-1) + nx*(ny-1)`.
#[derive(Debug, Clone)]
pub struct Grad2dAniso {
    nx: usize,
    ny: usize,
}

pub fn grad2d_aniso(nx: usize, ny: usize) -> Result<Grad2dAniso, CcdError> {
    if nx < 2 || ny < 2 {
        return Err(CcdError::InvalidParameter(format!(
            "grad2d_aniso needs nx >= 2 and ny >= 2, got {nx} x {ny}"
        )));
    }
    Ok(Grad2dAniso { nx, ny })
}

impl Grad2dAniso {
    pub fn grid(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }
}

impl LinearOperator for Grad2dAniso {
    fn n_in(&self) -> usize {
        self.nx * self.ny
    }
    fn n_out(&self) -> usize {
        self.ny * (self.nx - 1) + self.nx * (self.ny - 1)
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        let mut k = 0;
        for i in 0..ny {
            for j in 0..nx - 1 {
                y[k] = x[i * nx + j + 1] - x[i * nx + j];
                k += 1;
            }
        }
        for i in 0..ny - 1 {
            for j in 0..nx {
                y[k] = x[(i + 1) * nx + j] - x[i * nx + j];
                k += 1;
            }
        }
    }
    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        x.fill(0.0);
        let mut k = 0;
        for i in 0..ny {
            for j in 0..nx - 1 {
                x[i * nx + j] -= y[k];
                x[i * nx + j + 1] += y[k];
                k += 1;
            }
        }
        for i in 0..ny - 1 {
            for j in 0..nx {
                x[i * nx + j] -= y[k];
                x[(i + 1) * nx + j] += y[k];
                k += 1;
            }
        }
    }
}

/// Surface-displacement kernel of a line of dilatational point sources at
/// depth `D` under the segment `[0, A]`:
///
/// ```text
/// d(z) = c * integral over [0,A] of D u(xi) dxi / (D^2 + (z - xi)^2)^(3/2)
/// ```
///
/// Discretized by the midpoint rule on uniform grids for both the model
/// coordinate `xi` and the observation coordinate `z`; the resulting dense
/// `n_data x n_model` matrix is materialized once at build time.
pub fn dilat1d_kernel(
    n_model: usize,
    n_data: usize,
    depth: f64,
    length: f64,
    scale: f64,
) -> Result<DenseOperator, CcdError> {
    if depth <= 0.0 || length <= 0.0 {
        return Err(CcdError::InvalidParameter(format!(
            "dilat1d kernel needs positive depth and length, got D={depth}, A={length}"
        )));
    }
    if n_model == 0 || n_data == 0 {
        return Err(CcdError::InvalidParameter(
            "dilat1d kernel needs at least one model and one data cell".into(),
        ));
    }
    let d_xi = length / n_model as f64;
    let d_z = length / n_data as f64;
    let d2 = depth * depth;
    let mut data = Vec::with_capacity(n_data * n_model);
    for i in 0..n_data {
        let z = (i as f64 + 0.5) * d_z;
        for j in 0..n_model {
            let xi = (j as f64 + 0.5) * d_xi;
            let r = z - xi;
            data.push(scale * depth * d_xi / (d2 + r * r).powf(1.5));
        }
    }
    dense_operator(n_data, n_model, data)
}

/// 2-D analogue of [`dilat1d_kernel`]: pore-pressure change on an
/// `n_side x n_side` grid over `[-A, A] x [-A, A]` at depth `D` mapped to
/// vertical surface displacement on the same grid,
///
/// ```text
/// d(x,y) = c * double integral of D u(xi,eta) dxi deta
///          / (D^2 + (x-xi)^2 + (y-eta)^2)^(3/2)
/// ```
///
/// Midpoint quadrature; grids are row-major with the y index outermost.
pub fn reservoir2d_kernel(
    n_side: usize,
    depth: f64,
    half_width: f64,
    scale: f64,
) -> Result<DenseOperator, CcdError> {
    if depth <= 0.0 || half_width <= 0.0 {
        return Err(CcdError::InvalidParameter(format!(
            "reservoir2d kernel needs positive depth and half-width, got D={depth}, A={half_width}"
        )));
    }
    if n_side == 0 {
        return Err(CcdError::InvalidParameter(
            "reservoir2d kernel needs at least one grid cell".into(),
        ));
    }
    let n = n_side * n_side;
    let h = 2.0 * half_width / n_side as f64;
    let coord = |k: usize| -half_width + (k as f64 + 0.5) * h;
    let d2 = depth * depth;
    let weight = scale * depth * h * h;
    let mut data = vec![0.0; n * n];
    for iy in 0..n_side {
        let y = coord(iy);
        for ix in 0..n_side {
            let x = coord(ix);
            let row = iy * n_side + ix;
            for jy in 0..n_side {
                let eta = coord(jy);
                let dy = y - eta;
                for jx in 0..n_side {
                    let xi = coord(jx);
                    let dx = x - xi;
                    data[row * n + jy * n_side + jx] =
                        weight / (d2 + dx * dx + dy * dy).powf(1.5);
                }
            }
        }
    }
    dense_operator(n, n, data)
}

/// The stacked least-squares operator `F = [√α·A; √λ·B]`.
///
/// Forward application concatenates `√α·Au` on top of `√λ·Bu`; the adjoint
/// combines the block adjoints. The inner minimization of every ADMM-family
/// solver is a least-squares problem in this operator.
pub struct StackedOperator<A, B> {
    a_op: A,
    b_op: B,
    alpha: f64,
    lambda: f64,
    sqrt_alpha: f64,
    sqrt_lambda: f64,
}

/// Stacks a data operator and a regularization operator with weights
/// `alpha` and `lambda`. The two operators must share a domain dimension;
/// the weights must be nonnegative (zero switches a block off).
pub fn stack<A: LinearOperator, B: LinearOperator>(
    a_op: A,
    b_op: B,
    alpha: f64,
    lambda: f64,
) -> Result<StackedOperator<A, B>, CcdError> {
    if a_op.n_in() != b_op.n_in() {
        return Err(CcdError::DimensionMismatch {
            context: "stacking A and B",
            expected: a_op.n_in(),
            actual: b_op.n_in(),
        });
    }
    if !(alpha >= 0.0) || !(lambda >= 0.0) {
        return Err(CcdError::InvalidParameter(format!(
            "stack weights must be nonnegative, got alpha={alpha}, lambda={lambda}"
        )));
    }
    Ok(StackedOperator {
        a_op,
        b_op,
        alpha,
        lambda,
        sqrt_alpha: alpha.sqrt(),
        sqrt_lambda: lambda.sqrt(),
    })
}

impl<A: LinearOperator, B: LinearOperator> StackedOperator<A, B> {
    pub fn a_op(&self) -> &A {
        &self.a_op
    }
    pub fn b_op(&self) -> &B {
        &self.b_op
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    /// Rows contributed by the data block.
    pub fn rows_a(&self) -> usize {
        self.a_op.n_out()
    }
    /// Rows contributed by the regularization block.
    pub fn rows_b(&self) -> usize {
        self.b_op.n_out()
    }
    /// Assembles the right-hand side `[√α·d; √λ·g]` in stacked data space.
    pub fn stacked_rhs(&self, d: &[f64], g: &[f64]) -> Vec<f64> {
        debug_assert_eq!(d.len(), self.rows_a());
        debug_assert_eq!(g.len(), self.rows_b());
        let mut v = Vec::with_capacity(d.len() + g.len());
        v.extend(d.iter().map(|x| self.sqrt_alpha * x));
        v.extend(g.iter().map(|x| self.sqrt_lambda * x));
        v
    }
}

impl<A: LinearOperator, B: LinearOperator> LinearOperator for StackedOperator<A, B> {
    fn n_in(&self) -> usize {
        self.a_op.n_in()
    }
    fn n_out(&self) -> usize {
        self.a_op.n_out() + self.b_op.n_out()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (top, bottom) = y.split_at_mut(self.a_op.n_out());
        self.a_op.apply(x, top);
        linalg::scale(self.sqrt_alpha, top);
        self.b_op.apply(x, bottom);
        linalg::scale(self.sqrt_lambda, bottom);
    }
    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]) {
        let (top, bottom) = y.split_at(self.a_op.n_out());
        self.a_op.apply_adjoint(top, x);
        linalg::scale(self.sqrt_alpha, x);
        let mut xb = vec![0.0; self.b_op.n_in()];
        self.b_op.apply_adjoint(bottom, &mut xb);
        linalg::axpy(self.sqrt_lambda, &xb, x);
    }
}

/// Thread-safe application counters for a wrapped operator.
///
/// A budget, when present, caps the combined number of forward and adjoint
/// applications; the solvers consult [`OpCounter::combined`] before starting
/// an outer iteration so a run always ends on a complete iteration.
#[derive(Debug, Default)]
pub struct OpCounter {
    n_apply: AtomicU64,
    n_apply_adjoint: AtomicU64,
    budget: Option<u64>,
}

impl OpCounter {
    pub fn new(budget: Option<u64>) -> Arc<Self> {
        Arc::new(Self {
            n_apply: AtomicU64::new(0),
            n_apply_adjoint: AtomicU64::new(0),
            budget,
        })
    }

    pub fn n_apply(&self) -> u64 {
        self.n_apply.load(Ordering::Relaxed)
    }

    pub fn n_apply_adjoint(&self) -> u64 {
        self.n_apply_adjoint.load(Ordering::Relaxed)
    }

    pub fn combined(&self) -> u64 {
        self.n_apply() + self.n_apply_adjoint()
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    /// True when `extra` more combined applications would still fit.
    pub fn fits(&self, extra: u64) -> bool {
        match self.budget {
            Some(cap) => self.combined() + extra <= cap,
            None => true,
        }
    }
}

/// Wraps an operator and counts applications in a shared [`OpCounter`].
pub struct CountingOperator<'a> {
    inner: &'a dyn LinearOperator,
    counter: Arc<OpCounter>,
}

impl<'a> CountingOperator<'a> {
    pub fn new(inner: &'a dyn LinearOperator, counter: Arc<OpCounter>) -> Self {
        Self { inner, counter }
    }

    pub fn counter(&self) -> &Arc<OpCounter> {
        &self.counter
    }
}

impl LinearOperator for CountingOperator<'_> {
    fn n_in(&self) -> usize {
        self.inner.n_in()
    }
    fn n_out(&self) -> usize {
        self.inner.n_out()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.counter.n_apply.fetch_add(1, Ordering::Relaxed);
        self.inner.apply(x, y);
    }
    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]) {
        self.counter.n_apply_adjoint.fetch_add(1, Ordering::Relaxed);
        self.inner.apply_adjoint(y, x);
    }
}

/// Materializes an operator as a dense matrix by applying it to basis vectors.
pub fn materialize(op: &dyn LinearOperator) -> DenseMatrix {
    let (rows, cols) = (op.n_out(), op.n_in());
    let mut out = DenseMatrix::zeros(rows, cols);
    let mut e = vec![0.0; cols];
    let mut col = vec![0.0; rows];
    for j in 0..cols {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..rows {
            out.set(i, j, col[i]);
        }
    }
    out
}

/// Materializes the normal-equations matrix `FᵀF` of an operator.
pub fn materialize_normal(op: &dyn LinearOperator) -> DenseMatrix {
    let n = op.n_in();
    let mut out = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut fe = vec![0.0; op.n_out()];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut fe);
        op.apply_adjoint(&fe, &mut col);
        e[j] = 0.0;
        for i in 0..n {
            out.set(i, j, col[i]);
        }
    }
    out
}

/// Largest eigenvalue of `AᵀA` — the squared largest singular value of `A`
/// — estimated by power iteration from a seeded random start. Runs on the
/// raw operator; never metered.
pub fn max_normal_eigenvalue(op: &dyn LinearOperator, n_iters: usize, seed: u64) -> f64 {
    use rand::SeedableRng;
    let n = op.n_in();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = linalg::norm2(&x);
    if norm == 0.0 {
        return 0.0;
    }
    linalg::scale(1.0 / norm, &mut x);
    let mut eig = 0.0;
    for _ in 0..n_iters {
        let ax = op.apply_vec(&x);
        let mut y = op.apply_adjoint_vec(&ax);
        eig = linalg::dot(&x, &y);
        let ny = linalg::norm2(&y);
        if ny == 0.0 {
            return 0.0;
        }
        linalg::scale(1.0 / ny, &mut y);
        x = y;
    }
    eig
}

/// Largest normalized adjoint defect `|<Ax,y> - <x,Aᵀy>| / (‖Ax‖‖y‖)` over
/// `trials` random vector pairs. A correct adjoint keeps this at roundoff.
pub fn adjoint_defect<R: Rng>(op: &dyn LinearOperator, rng: &mut R, trials: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let x: Vec<f64> = (0..op.n_in()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..op.n_out()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ax = op.apply_vec(&x);
        let aty = op.apply_adjoint_vec(&y);
        let lhs = linalg::dot(&ax, &y);
        let rhs = linalg::dot(&x, &aty);
        let denom = linalg::norm2(&ax) * linalg::norm2(&y);
        if denom > 0.0 {
            worst = worst.max((lhs - rhs).abs() / denom);
        }
    }
    worst
}
