//! Matrix-free solvers for L1- and total-variation-regularized least
//! squares,
//!
//! ```text
//! min over u:  ‖Bu‖₁ + (α/2)‖Au − d‖₂²
//! ```
//!
//! with `A` the data (modeling) operator and `B` the regularization
//! operator (identity for L1, a discrete gradient for TV). The crate
//! provides:
//!
//! - [`operators`]: the matrix-free operator abstraction, finite-difference
//!   and integral-kernel operators, the stacked operator `[√α·A; √λ·B]`,
//!   and application counting against a budget;
//! - [`proximal`]: soft thresholding and the composite objective;
//! - [`krylov`]: CGNE and a direct normal-equations solver;
//! - [`solvers`]: exact ADMM, compressive conjugate directions (full and
//!   limited-memory), ADMM with hot-restarted CGNE, steered conjugate
//!   directions with the method of multipliers, and ISTA/FISTA baselines;
//! - [`harness`]: synthetic truth models, band-limited noise, condition
//!   estimation and error metrics for benchmark experiments.
//!
//! The conjugate-direction solvers exploit that the stacked operator of the
//! inner least-squares problem never changes between outer iterations: only
//! the right-hand side drifts under shrinkage and multiplier updates, so
//! search directions built in earlier iterations remain conjugate and can
//! be recycled. Each outer iteration then costs a single application of `A`
//! and of `Aᵀ`, which is the metric that matters when the modeling operator
//! dominates the cost.

pub mod error;
pub mod harness;
pub mod krylov;
pub mod linalg;
pub mod operators;
pub mod proximal;
pub mod solvers;

pub use error::CcdError;
