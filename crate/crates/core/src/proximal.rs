//! Soft thresholding and the composite objective.

use crate::error::CcdError;
use crate::linalg;
use crate::operators::LinearOperator;

/// Componentwise soft thresholding (shrinkage),
/// `shrink(y, γ)_i = sign(y_i) * max(|y_i| - γ, 0)`.
///
/// This is the proximal map of `γ‖·‖₁`; the z-update of every ADMM-family
/// solver and the thresholding step of ISTA/FISTA. The `0/|0|` case is taken
/// as 0, the formula's continuous limit.
pub fn shrink(y: &[f64], gamma: f64) -> Result<Vec<f64>, CcdError> {
    if !(gamma > 0.0) {
        return Err(CcdError::InvalidParameter(format!(
            "shrink threshold must be positive, got {gamma}"
        )));
    }
    let mut out = y.to_vec();
    shrink_in_place(&mut out, gamma);
    Ok(out)
}

/// In-place variant of [`shrink`] for hot loops; `gamma` must be positive.
#[inline]
pub fn shrink_in_place(y: &mut [f64], gamma: f64) {
    debug_assert!(gamma > 0.0);
    for v in y.iter_mut() {
        let mag = v.abs() - gamma;
        *v = if mag > 0.0 { v.signum() * mag } else { 0.0 };
    }
}

/// The composite objective `p(u) = ‖Bu‖₁ + (α/2)‖Au − d‖₂²`.
pub struct Objective<'a> {
    a_op: &'a dyn LinearOperator,
    b_op: &'a dyn LinearOperator,
    d: &'a [f64],
    alpha: f64,
}

impl<'a> Objective<'a> {
    pub fn new(
        a_op: &'a dyn LinearOperator,
        b_op: &'a dyn LinearOperator,
        d: &'a [f64],
        alpha: f64,
    ) -> Result<Self, CcdError> {
        if !(alpha > 0.0) {
            return Err(CcdError::InvalidParameter(format!(
                "objective weight alpha must be positive, got {alpha}"
            )));
        }
        if d.len() != a_op.n_out() {
            return Err(CcdError::DimensionMismatch {
                context: "objective data vector",
                expected: a_op.n_out(),
                actual: d.len(),
            });
        }
        if a_op.n_in() != b_op.n_in() {
            return Err(CcdError::DimensionMismatch {
                context: "objective operator domains",
                expected: a_op.n_in(),
                actual: b_op.n_in(),
            });
        }
        Ok(Self { a_op, b_op, d, alpha })
    }

    /// Evaluates `p(u)`.
    pub fn value(&self, u: &[f64]) -> Result<f64, CcdError> {
        if u.len() != self.a_op.n_in() {
            return Err(CcdError::DimensionMismatch {
                context: "objective evaluation",
                expected: self.a_op.n_in(),
                actual: u.len(),
            });
        }
        let bu = self.b_op.apply_vec(u);
        let mut r = self.a_op.apply_vec(u);
        for (ri, di) in r.iter_mut().zip(self.d) {
            *ri -= di;
        }
        Ok(linalg::norm1(&bu) + 0.5 * self.alpha * linalg::dot(&r, &r))
    }
}

/// Convenience wrapper evaluating the objective once.
pub fn objective_value(
    a_op: &dyn LinearOperator,
    b_op: &dyn LinearOperator,
    d: &[f64],
    alpha: f64,
    u: &[f64],
) -> Result<f64, CcdError> {
    Objective::new(a_op, b_op, d, alpha)?.value(u)
}
