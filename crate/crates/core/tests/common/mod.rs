//! Shared instance builders and independent dense oracles for the
//! integration suites. The oracles go through nalgebra so they share no
//! code path with the solvers under test.
#![allow(dead_code)] // each test binary uses a different subset

use ccd_core::operators::{dense_operator, materialize, DenseOperator, LinearOperator};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

pub fn random_dense(rng: &mut ChaCha12Rng, rows: usize, cols: usize) -> DenseOperator {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    dense_operator(rows, cols, data).unwrap()
}

pub fn random_vec(rng: &mut ChaCha12Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn to_nalgebra(op: &dyn LinearOperator) -> DMatrix<f64> {
    let m = materialize(op);
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
}

/// Least-squares solve `min ‖M x − v‖₂` by nalgebra SVD.
pub fn dense_least_squares(op: &dyn LinearOperator, v: &[f64]) -> Vec<f64> {
    let m = to_nalgebra(op);
    let rhs = DVector::from_column_slice(v);
    let svd = m.svd(true, true);
    svd.solve(&rhs, 1e-14).unwrap().iter().copied().collect()
}

/// KKT solve of `min ‖Au − d‖₂²  s.t.  Bu = c` through the bordered system
/// `[2AᵀA Bᵀ; B 0][u; μ] = [2Aᵀd; c]`.
pub fn kkt_constrained_ls(
    a_op: &dyn LinearOperator,
    b_op: &dyn LinearOperator,
    d: &[f64],
    c: &[f64],
) -> Vec<f64> {
    let a = to_nalgebra(a_op);
    let b = to_nalgebra(b_op);
    let n = a.ncols();
    let k = b.nrows();
    let ata = 2.0 * a.transpose() * &a;
    let mut kkt = DMatrix::zeros(n + k, n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(&ata);
    kkt.view_mut((0, n), (n, k)).copy_from(&b.transpose());
    kkt.view_mut((n, 0), (k, n)).copy_from(&b);
    let mut rhs = DVector::zeros(n + k);
    let atd = 2.0 * a.transpose() * DVector::from_column_slice(d);
    rhs.rows_mut(0, n).copy_from(&atd);
    rhs.rows_mut(n, k).copy_from(&DVector::from_column_slice(c));
    let sol = kkt.lu().solve(&rhs).expect("KKT system solvable");
    sol.iter().take(n).copied().collect()
}

/// Extreme eigenvalues of the materialized `FᵀF` by a dense symmetric
/// eigendecomposition.
pub fn dense_normal_eig_extremes(f_op: &dyn LinearOperator) -> (f64, f64) {
    let f = to_nalgebra(f_op);
    let ftf = f.transpose() * &f;
    let eig = ftf.symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in eig.eigenvalues.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (hi, lo)
}
