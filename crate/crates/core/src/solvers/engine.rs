//! Conjugate-direction recycling for least-squares problems whose
//! right-hand side drifts between iterations.
//!
//! The engine maintains direction pairs `(p_i, q_i)` with `q_i = F p_i` and
//! `q_iᵀ q_j = 0` for `i ≠ j`, so the minimizer of `‖F u − v_k‖₂` over their
//! span is the expansion `u = Σ (q_iᵀ v_k / δ_i) p_i` with `δ_i = q_iᵀ q_i`.
//! When the right-hand side changes, only the expansion coefficients need
//! recomputing; the directions are reused. Each iteration appends one new
//! direction built from the residual against the *next* right-hand side,
//! F-orthogonalized against everything stored — one forward and one adjoint
//! application of `F` per iteration.
//!
//! With a memory bound `m`, the freshest `m+1` pairs live in a circular
//! buffer; a direction about to be overwritten first freezes its current
//! contribution into the accumulators `ũ` (model space) and `ṽ` (data
//! space), after which coefficients are computed against `v_k − ṽ` and the
//! solution is assembled as `ũ + Σ τ_i p_i`.

use crate::error::CcdError;
use crate::linalg::{self, axpy, dot};
use crate::operators::LinearOperator;

/// A new direction whose image has squared norm below this fraction of the
/// largest seen so far is degenerate: it is replaced by zero vectors with
/// `δ = 1` so it drops out of every expansion.
const DEGENERACY_REL: f64 = 1e-24;

/// Storage for conjugate-direction pairs, unbounded or circular.
pub struct DirectionStore {
    p: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    delta: Vec<f64>,
    /// `m + 1` slots when memory-limited; `None` grows without bound.
    capacity: Option<usize>,
    /// Slot written most recently.
    head: usize,
    /// Set once the circular buffer has wrapped and evictions have begun.
    cycled: bool,
    u_tilde: Vec<f64>,
    v_tilde: Vec<f64>,
    delta_max: f64,
}

impl DirectionStore {
    fn new(n_model: usize, n_data: usize, capacity: Option<usize>) -> Self {
        Self {
            p: Vec::new(),
            q: Vec::new(),
            delta: Vec::new(),
            capacity,
            head: 0,
            cycled: false,
            u_tilde: vec![0.0; n_model],
            v_tilde: vec![0.0; n_data],
            delta_max: 0.0,
        }
    }

    /// Number of live direction slots.
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn images(&self) -> &[Vec<f64>] {
        &self.q
    }

    pub fn deltas(&self) -> &[f64] {
        &self.delta
    }

    /// Slot that will be overwritten by the next insertion once the buffer
    /// is full; `None` while the store still grows.
    pub fn next_eviction_slot(&self) -> Option<usize> {
        match self.capacity {
            Some(cap) if self.p.len() == cap => Some((self.head + 1) % cap),
            _ => None,
        }
    }

    /// Frozen model-space contribution of evicted directions.
    pub fn u_tilde(&self) -> &[f64] {
        &self.u_tilde
    }

    /// Frozen data-space contribution of evicted directions.
    pub fn v_tilde(&self) -> &[f64] {
        &self.v_tilde
    }

    pub fn has_cycled(&self) -> bool {
        self.cycled
    }

    fn is_degenerate(&self, delta: f64) -> bool {
        delta <= DEGENERACY_REL * self.delta_max
    }

    fn normalize_candidate(&mut self, p: &mut Vec<f64>, q: &mut Vec<f64>) -> f64 {
        let delta = dot(q, q);
        if self.is_degenerate(delta) {
            p.iter_mut().for_each(|x| *x = 0.0);
            q.iter_mut().for_each(|x| *x = 0.0);
            1.0
        } else {
            self.delta_max = self.delta_max.max(delta);
            delta
        }
    }

    fn push_first(&mut self, mut p: Vec<f64>, mut q: Vec<f64>) {
        let delta = self.normalize_candidate(&mut p, &mut q);
        self.p.push(p);
        self.q.push(q);
        self.delta.push(delta);
        self.head = 0;
    }

    /// Inserts a direction after the initial one: appends when unbounded,
    /// otherwise advances the circular head, freezing the about-to-be
    /// overwritten pair's contribution (`tau` indexed by slot).
    fn advance_insert(&mut self, mut p: Vec<f64>, mut q: Vec<f64>, tau: &[f64]) {
        let delta = self.normalize_candidate(&mut p, &mut q);
        match self.capacity {
            Some(cap) if self.p.len() == cap => {
                let mut next = self.head + 1;
                if next == cap {
                    next = 0;
                    self.cycled = true;
                }
                if self.cycled {
                    axpy(tau[next], &self.p[next], &mut self.u_tilde);
                    axpy(tau[next], &self.q[next], &mut self.v_tilde);
                }
                self.p[next] = p;
                self.q[next] = q;
                self.delta[next] = delta;
                self.head = next;
            }
            _ => {
                self.p.push(p);
                self.q.push(q);
                self.delta.push(delta);
                self.head = self.p.len() - 1;
            }
        }
    }

    /// Largest normalized conjugacy defect `|q_iᵀq_j| / (‖q_i‖‖q_j‖)` over
    /// distinct stored pairs with nonzero norms. Zero for a store that is
    /// perfectly pairwise conjugate.
    pub fn max_conjugacy_defect(&self) -> f64 {
        let norms: Vec<f64> = self.q.iter().map(|q| linalg::norm2(q)).collect();
        let mut worst: f64 = 0.0;
        for i in 0..self.q.len() {
            if norms[i] == 0.0 {
                continue;
            }
            for j in i + 1..self.q.len() {
                if norms[j] == 0.0 {
                    continue;
                }
                let defect = dot(&self.q[i], &self.q[j]).abs() / (norms[i] * norms[j]);
                worst = worst.max(defect);
            }
        }
        worst
    }

    /// Largest normalized projection `|q_iᵀ r| / (‖q_i‖‖r‖)` of a residual
    /// onto the stored images.
    pub fn max_residual_projection(&self, r: &[f64]) -> f64 {
        let r_norm = linalg::norm2(r);
        if r_norm == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for q in &self.q {
            let q_norm = linalg::norm2(q);
            if q_norm == 0.0 {
                continue;
            }
            worst = worst.max(dot(q, r).abs() / (q_norm * r_norm));
        }
        worst
    }

    /// Largest relative defect `‖F p_i − q_i‖ / ‖q_i‖` over stored pairs
    /// with nonzero image. Applies `f_op` once per pair.
    pub fn max_image_defect(&self, f_op: &dyn LinearOperator) -> f64 {
        let mut worst: f64 = 0.0;
        for (p, q) in self.p.iter().zip(&self.q) {
            let q_norm = linalg::norm2(q);
            if q_norm == 0.0 {
                continue;
            }
            let fp = f_op.apply_vec(p);
            worst = worst.max(linalg::dist2(&fp, q) / q_norm);
        }
        worst
    }
}

/// Observable output of one direction update.
pub struct ScdStep {
    /// Squared norm of the residual `v_{k+1} − F u_{k+1} − ṽ` against the
    /// freshly supplied right-hand side.
    pub residual_norm_sq: f64,
    /// With auditing enabled, the residual's largest normalized projection
    /// onto the direction images stored *before* this update inserted a new
    /// one. For a stationary right-hand side this is a roundoff-level
    /// quantity; the new direction itself is built from the residual and is
    /// excluded.
    pub residual_projection_defect: Option<f64>,
}

/// The steered conjugate-directions engine.
///
/// Call [`ScdEngine::compute_solution`] to expand the current right-hand
/// side over the stored directions (no operator applications), then
/// [`ScdEngine::update_directions`] with the next right-hand side to extend
/// the direction set (one forward, one adjoint application).
pub struct ScdEngine<'a> {
    f_op: &'a dyn LinearOperator,
    store: DirectionStore,
    tau: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    last_residual: Vec<f64>,
    iteration: usize,
    audit: bool,
}

impl<'a> ScdEngine<'a> {
    /// Seeds the direction set with `p_0 = Fᵀ v_0`, `q_0 = F p_0`.
    /// Costs one adjoint and one forward application.
    pub fn new(
        f_op: &'a dyn LinearOperator,
        v0: Vec<f64>,
        memory: Option<usize>,
    ) -> Result<Self, CcdError> {
        if v0.len() != f_op.n_out() {
            return Err(CcdError::DimensionMismatch {
                context: "initial right-hand side",
                expected: f_op.n_out(),
                actual: v0.len(),
            });
        }
        let p0 = f_op.apply_adjoint_vec(&v0);
        let q0 = f_op.apply_vec(&p0);
        let mut store = DirectionStore::new(f_op.n_in(), f_op.n_out(), memory.map(|m| m + 1));
        store.push_first(p0, q0);
        Ok(Self {
            f_op,
            store,
            tau: Vec::new(),
            u: vec![0.0; f_op.n_in()],
            v: v0,
            last_residual: Vec::new(),
            iteration: 0,
            audit: false,
        })
    }

    /// Enables residual-projection auditing in [`ScdStep`].
    pub fn set_audit(&mut self, audit: bool) {
        self.audit = audit;
    }

    pub fn store(&self) -> &DirectionStore {
        &self.store
    }

    pub fn into_store(self) -> DirectionStore {
        self.store
    }

    /// Completed iterations (direction updates).
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Latest expanded solution.
    pub fn solution(&self) -> &[f64] {
        &self.u
    }

    /// Residual formed during the last direction update.
    pub fn last_residual(&self) -> &[f64] {
        &self.last_residual
    }

    /// Expands the solution for the current right-hand side:
    /// `τ_i = q_iᵀ (v_k − ṽ) / δ_i`, `u = ũ + Σ τ_i p_i`.
    /// No operator applications.
    pub fn compute_solution(&mut self) -> &[f64] {
        let mut v_eff = self.v.clone();
        for (vi, ti) in v_eff.iter_mut().zip(self.store.v_tilde()) {
            *vi -= ti;
        }
        self.tau = self
            .store
            .images()
            .iter()
            .zip(self.store.deltas())
            .map(|(q, &delta)| dot(q, &v_eff) / delta)
            .collect();
        self.u.copy_from_slice(self.store.u_tilde());
        for (t, p) in self.tau.iter().zip(self.store.directions()) {
            axpy(*t, p, &mut self.u);
        }
        &self.u
    }

    /// Builds the next conjugate direction against the residual of the
    /// supplied right-hand side:
    ///
    /// ```text
    /// r = v_{k+1} − Σ τ_i q_i − ṽ
    /// w = Fᵀ r;  s = F w
    /// β_i = −q_iᵀ s / δ_i
    /// p_new = Σ β_i p_i + w;  q_new = Σ β_i q_i + s
    /// ```
    ///
    /// Exactly one adjoint and one forward application of `F`. Must follow
    /// a [`ScdEngine::compute_solution`] call for the same iteration.
    pub fn update_directions(&mut self, v_next: Vec<f64>) -> ScdStep {
        debug_assert_eq!(v_next.len(), self.f_op.n_out());
        debug_assert_eq!(
            self.tau.len(),
            self.store.len(),
            "compute_solution must run before update_directions"
        );
        let mut r = v_next.clone();
        for (t, q) in self.tau.iter().zip(self.store.images()) {
            axpy(-*t, q, &mut r);
        }
        for (ri, ti) in r.iter_mut().zip(self.store.v_tilde()) {
            *ri -= ti;
        }
        let residual_norm_sq = dot(&r, &r);
        let residual_projection_defect = self
            .audit
            .then(|| self.store.max_residual_projection(&r));

        let w = self.f_op.apply_adjoint_vec(&r);
        let s = self.f_op.apply_vec(&w);

        let mut p_new = w;
        let mut q_new = s.clone();
        for ((p, q), &delta) in self
            .store
            .directions()
            .iter()
            .zip(self.store.images())
            .zip(self.store.deltas())
        {
            let beta = -dot(q, &s) / delta;
            axpy(beta, p, &mut p_new);
            axpy(beta, q, &mut q_new);
        }
        self.store.advance_insert(p_new, q_new, &self.tau);

        self.last_residual = r;
        self.v = v_next;
        self.iteration += 1;
        ScdStep {
            residual_norm_sq,
            residual_projection_defect,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{dense_operator, stack, IdentityOperator};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_op(
        rng: &mut ChaCha12Rng,
        rows: usize,
        cols: usize,
    ) -> crate::operators::DenseOperator {
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        dense_operator(rows, cols, data).unwrap()
    }

    #[test]
    fn zero_rhs_produces_zero_iterates_and_degenerate_directions() {
        let a = IdentityOperator::new(3);
        let b = IdentityOperator::new(3);
        let f = stack(&a as &dyn LinearOperator, &b as &dyn LinearOperator, 1.0, 1.0).unwrap();
        let mut engine = ScdEngine::new(&f, vec![0.0; 6], None).unwrap();
        for _ in 0..4 {
            let u = engine.compute_solution().to_vec();
            assert!(u.iter().all(|&x| x == 0.0));
            engine.update_directions(vec![0.0; 6]);
        }
        // every direction is the degenerate placeholder
        assert!(engine.store().deltas().iter().all(|&d| d == 1.0));
        assert!(engine
            .store()
            .images()
            .iter()
            .all(|q| q.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn conjugacy_holds_under_drifting_rhs() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let a = random_op(&mut rng, 14, 10);
        let b = IdentityOperator::new(10);
        let f = stack(&a as &dyn LinearOperator, &b as &dyn LinearOperator, 1.5, 0.3).unwrap();
        let next_v =
            |rng: &mut ChaCha12Rng| -> Vec<f64> { (0..24).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let mut engine = ScdEngine::new(&f, next_v(&mut rng), None).unwrap();
        for _ in 0..8 {
            engine.compute_solution();
            engine.update_directions(next_v(&mut rng));
            assert!(engine.store().max_conjugacy_defect() <= 1e-10);
            assert!(engine.store().max_image_defect(&f) <= 1e-12);
        }
    }

    #[test]
    fn residual_orthogonality_holds_for_stationary_rhs() {
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        let a = random_op(&mut rng, 12, 9);
        let b = IdentityOperator::new(9);
        let f = stack(&a as &dyn LinearOperator, &b as &dyn LinearOperator, 1.0, 0.4).unwrap();
        let v: Vec<f64> = (0..21).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut engine = ScdEngine::new(&f, v.clone(), None).unwrap();
        engine.set_audit(true);
        for _ in 0..9 {
            engine.compute_solution();
            let step = engine.update_directions(v.clone());
            assert!(step.residual_projection_defect.unwrap() <= 1e-10);
        }
    }

    #[test]
    fn stationary_rhs_solves_least_squares_within_n_iterations() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let a = random_op(&mut rng, 9, 6);
        let b = IdentityOperator::new(6);
        let f = stack(&a as &dyn LinearOperator, &b as &dyn LinearOperator, 1.0, 0.2).unwrap();
        let v: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut engine = ScdEngine::new(&f, v.clone(), None).unwrap();
        let mut u = Vec::new();
        for _ in 0..6 {
            u = engine.compute_solution().to_vec();
            engine.update_directions(v.clone());
        }
        let direct = crate::krylov::direct_ls_solve(&f, &v).unwrap();
        let err = linalg::dist2(&u, &direct) / linalg::norm2(&direct);
        assert!(err <= 1e-8, "expansion missed the LS solution by {err}");
    }

    #[test]
    fn limited_memory_accumulators_track_evicted_contributions() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let a = random_op(&mut rng, 10, 7);
        let b = IdentityOperator::new(7);
        let f = stack(&a as &dyn LinearOperator, &b as &dyn LinearOperator, 1.0, 0.5).unwrap();
        let next_v =
            |rng: &mut ChaCha12Rng| -> Vec<f64> { (0..17).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        // memory 2 -> 3 slots; evictions start at the third update
        let mut engine = ScdEngine::new(&f, next_v(&mut rng), Some(2)).unwrap();
        let mut evicted_u = vec![0.0; 7];
        let mut evicted_v = vec![0.0; 17];
        for _ in 0..7 {
            engine.compute_solution();
            let evict = engine.store().next_eviction_slot().map(|slot| {
                (
                    engine.store().directions()[slot].clone(),
                    engine.store().images()[slot].clone(),
                    engine.tau[slot],
                )
            });
            engine.update_directions(next_v(&mut rng));
            if let Some((pe, qe, te)) = evict {
                axpy(te, &pe, &mut evicted_u);
                axpy(te, &qe, &mut evicted_v);
                assert!(linalg::dist2(engine.store().u_tilde(), &evicted_u) <= 1e-12);
                assert!(linalg::dist2(engine.store().v_tilde(), &evicted_v) <= 1e-12);
            }
        }
        assert!(engine.store().has_cycled());
        assert_eq!(engine.store().len(), 3);
    }
}
