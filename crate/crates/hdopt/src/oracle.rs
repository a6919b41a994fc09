//! First-order oracles: objective value and gradient queries.
//!
//! Solvers only see this interface, so everything from a two-dimensional
//! quadratic to a PDE-constrained objective plugs into the same methods. An
//! oracle also carries *hints*: a Lipschitz constant for the gradient, a
//! strong-convexity lower bound, a known optimal value, and a declared
//! inexactness level `delta`. Hints are advisory — adaptive methods work
//! without them — but restart certificates and inexactness-aware line
//! searches consume them when present.
//!
//! The inexactness model follows the two-sided bound
//!
//! ```text
//! 0 <= J(q2) - Jd(q1) - <gd(q1), q2 - q1> <= (L/2) ||q2 - q1||^2 + delta
//! ```
//!
//! for all `q1, q2` in a ball of declared diameter, where `(Jd, gd)` are the
//! perturbed value and gradient. [`Perturbed`] realizes it with a downward
//! value bias `delta * xi(q)`, `xi in [1/4, 3/4]`, and a gradient error of
//! norm at most `delta / (4 * diameter)`; both are deterministic hashes of
//! the query point and a seed, so noisy runs replay bit-for-bit.


use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hilbert::{operator_norm_sq, HVector, LinearOperator, Space};
use crate::{Error, Result};

/// Advisory knowledge about an oracle's objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleInfo {
    /// Upper bound on the gradient Lipschitz constant, if known.
    pub l_hint: Option<f64>,
    /// Strong-convexity lower bound, if known.
    pub mu_hint: Option<f64>,
    /// Declared inexactness level of value/gradient queries.
    pub delta: f64,
    /// Known optimal value (e.g. 0 for compatible least squares).
    pub j_star: Option<f64>,
}

impl Default for OracleInfo {
    fn default() -> Self {
        OracleInfo { l_hint: None, mu_hint: None, delta: 0.0, j_star: None }
    }
}

/// A first-order oracle over a weighted coefficient space.
pub trait Oracle {
    /// Domain of the objective.
    fn space(&self) -> Space;
    /// Objective value at `q`.
    fn value(&self, q: &HVector) -> f64;
    /// Gradient at `q`, represented in the same weighted space (Riesz
    /// representer: directional derivatives are weighted inner products
    /// against it).
    fn gradient(&self, q: &HVector) -> HVector;
    /// Value and gradient together; override when they share work.
    fn value_and_gradient(&self, q: &HVector) -> (f64, HVector) {
        (self.value(q), self.gradient(q))
    }
    fn info(&self) -> OracleInfo {
        OracleInfo::default()
    }
}

impl<O: Oracle + ?Sized> Oracle for &O {
    fn space(&self) -> Space {
        (**self).space()
    }
    fn value(&self, q: &HVector) -> f64 {
        (**self).value(q)
    }
    fn gradient(&self, q: &HVector) -> HVector {
        (**self).gradient(q)
    }
    fn value_and_gradient(&self, q: &HVector) -> (f64, HVector) {
        (**self).value_and_gradient(q)
    }
    fn info(&self) -> OracleInfo {
        (**self).info()
    }
}

/// Oracle wrapper owned by a run; counts every query exactly once.
pub struct Counted<'a, O: Oracle + ?Sized> {
    oracle: &'a O,
    pub func_evals: u64,
    pub grad_evals: u64,
}

impl<'a, O: Oracle + ?Sized> Counted<'a, O> {
    pub fn new(oracle: &'a O) -> Self {
        Counted { oracle, func_evals: 0, grad_evals: 0 }
    }

    pub fn space(&self) -> Space {
        self.oracle.space()
    }

    pub fn info(&self) -> OracleInfo {
        self.oracle.info()
    }

    pub fn value(&mut self, q: &HVector) -> f64 {
        self.func_evals += 1;
        self.oracle.value(q)
    }

    pub fn gradient(&mut self, q: &HVector) -> HVector {
        self.grad_evals += 1;
        self.oracle.gradient(q)
    }

    pub fn value_and_gradient(&mut self, q: &HVector) -> (f64, HVector) {
        self.func_evals += 1;
        self.grad_evals += 1;
        self.oracle.value_and_gradient(q)
    }
}

/// Least-squares objective `J(q) = 1/2 ||A q - f||^2` with gradient
/// `A*(A q - f)`; the archetypal smooth convex objective here.
pub struct LeastSquares<A: LinearOperator> {
    op: A,
    data: HVector,
    info: OracleInfo,
}

/// Fixed seed for the construction-time power-method estimate of `||A||^2`,
/// so identical problems always report identical hints.
const L_HINT_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

impl<A: LinearOperator> LeastSquares<A> {
    /// Builds the oracle and estimates `l_hint = ||A||^2` by the power
    /// method. Errors if `data` does not live in the range of `A`'s space.
    pub fn new(op: A, data: HVector) -> Result<Self> {
        if data.len() != op.range().len {
            return Err(Error::DimensionMismatch {
                expected: op.range().len,
                got: data.len(),
                what: "least-squares data vs operator range",
            });
        }
        if data.space() != op.range() {
            return Err(Error::bad_param("data", "weight differs from operator range weight"));
        }
        let l = operator_norm_sq(&op, L_HINT_SEED).value;
        let info = OracleInfo { l_hint: Some(l), ..OracleInfo::default() };
        Ok(LeastSquares { op, data, info })
    }

    /// Declares that `A q = f` is solvable, i.e. the optimal value is 0.
    pub fn declare_compatible(mut self) -> Self {
        self.info.j_star = Some(0.0);
        self
    }

    /// Records a caller-supplied smallest eigenvalue of `A*A`.
    pub fn with_mu(mut self, mu: f64) -> Self {
        self.info.mu_hint = Some(mu);
        self
    }

    /// Overrides the power-method Lipschitz hint (e.g. with a conservative
    /// analytic bound).
    pub fn with_l_hint(mut self, l: f64) -> Self {
        self.info.l_hint = Some(l);
        self
    }

    pub fn operator(&self) -> &A {
        &self.op
    }

    pub fn data(&self) -> &HVector {
        &self.data
    }

    /// Residual `A q - f`.
    pub fn residual(&self, q: &HVector) -> HVector {
        &self.op.apply(q) - &self.data
    }
}

impl<A: LinearOperator> Oracle for LeastSquares<A> {
    fn space(&self) -> Space {
        self.op.domain()
    }

    fn value(&self, q: &HVector) -> f64 {
        0.5 * self.residual(q).norm_sq()
    }

    fn gradient(&self, q: &HVector) -> HVector {
        self.op.apply_adjoint(&self.residual(q))
    }

    fn value_and_gradient(&self, q: &HVector) -> (f64, HVector) {
        let r = self.residual(q);
        (0.5 * r.norm_sq(), self.op.apply_adjoint(&r))
    }

    fn info(&self) -> OracleInfo {
        self.info
    }
}

/// Tikhonov-style regularization `J(q) + (mu/2) ||q||^2`.
pub struct Regularized<O: Oracle> {
    base: O,
    mu: f64,
}

/// Adds `(mu/2) ||q||^2` to an oracle; the hints shift accordingly
/// (`l_hint + mu`, `mu_hint + mu`) and the optimal value becomes unknown.
pub fn regularize<O: Oracle>(base: O, mu: f64) -> Result<Regularized<O>> {
    if !(mu >= 0.0) {
        return Err(Error::bad_param("mu", "regularization weight must be nonnegative"));
    }
    Ok(Regularized { base, mu })
}

impl<O: Oracle> Regularized<O> {
    pub fn mu(&self) -> f64 {
        self.mu
    }
}

impl<O: Oracle> Oracle for Regularized<O> {
    fn space(&self) -> Space {
        self.base.space()
    }

    fn value(&self, q: &HVector) -> f64 {
        self.base.value(q) + 0.5 * self.mu * q.norm_sq()
    }

    fn gradient(&self, q: &HVector) -> HVector {
        let mut g = self.base.gradient(q);
        g.axpy(self.mu, q);
        g
    }

    fn value_and_gradient(&self, q: &HVector) -> (f64, HVector) {
        let (v, mut g) = self.base.value_and_gradient(q);
        g.axpy(self.mu, q);
        (v + 0.5 * self.mu * q.norm_sq(), g)
    }

    fn info(&self) -> OracleInfo {
        let base = self.base.info();
        OracleInfo {
            l_hint: base.l_hint.map(|l| l + self.mu),
            mu_hint: Some(base.mu_hint.unwrap_or(0.0) + self.mu),
            delta: base.delta,
            j_star: None,
        }
    }
}

/// Deterministic bounded perturbation of an oracle (see module docs).
pub struct Perturbed<O: Oracle> {
    base: O,
    delta: f64,
    diameter: f64,
    seed: u64,
}

/// Wraps `base` in value/gradient noise of level `delta`, valid on any ball
/// of the given diameter. Same `(q, seed)` always produces the same noise.
pub fn perturb<O: Oracle>(base: O, delta: f64, diameter: f64, seed: u64) -> Result<Perturbed<O>> {
    if !(delta >= 0.0) {
        return Err(Error::bad_param("delta", "noise level must be nonnegative"));
    }
    if !(diameter > 0.0) {
        return Err(Error::bad_param("diameter", "diameter must be positive"));
    }
    Ok(Perturbed { base, delta, diameter, seed })
}

/// FNV-1a over the raw coordinate bits, finished with a splitmix64 mix. Kept
/// local and explicit (rather than the std hasher) so noise streams are
/// stable across Rust releases.
fn point_hash(q: &HVector, seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for v in q.as_slice() {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100_0000_01b3);
        }
    }
    // splitmix64 finalizer
    h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

impl<O: Oracle> Perturbed<O> {
    fn rng_at(&self, q: &HVector) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(point_hash(q, self.seed))
    }

    /// Value bias multiplier `xi(q) in [1/4, 3/4]`.
    fn xi(&self, q: &HVector) -> f64 {
        0.25 + 0.5 * self.rng_at(q).gen::<f64>()
    }

    /// Gradient error with `||e(q)|| <= delta / (4 * diameter)`; together
    /// with the `xi` range this keeps both sides of the inexactness bound.
    fn grad_error(&self, q: &HVector) -> HVector {
        let mut rng = self.rng_at(q);
        let _ = rng.gen::<f64>(); // consume the xi draw to decorrelate
        let magnitude = self.delta / (4.0 * self.diameter) * rng.gen::<f64>();
        let mut dir = HVector::from_fn(q.len(), q.weight(), |_| rng.gen::<f64>() * 2.0 - 1.0);
        let n = dir.norm();
        if n == 0.0 || magnitude == 0.0 {
            return HVector::zeros(q.len(), q.weight());
        }
        dir = dir.scaled(magnitude / n);
        dir
    }
}

impl<O: Oracle> Oracle for Perturbed<O> {
    fn space(&self) -> Space {
        self.base.space()
    }

    fn value(&self, q: &HVector) -> f64 {
        if self.delta == 0.0 {
            return self.base.value(q);
        }
        self.base.value(q) - self.delta * self.xi(q)
    }

    fn gradient(&self, q: &HVector) -> HVector {
        if self.delta == 0.0 {
            return self.base.gradient(q);
        }
        let mut g = self.base.gradient(q);
        g.axpy(1.0, &self.grad_error(q));
        g
    }

    fn info(&self) -> OracleInfo {
        let base = self.base.info();
        OracleInfo { delta: base.delta + self.delta, ..base }
    }
}

/// Largest normalized disagreement between the oracle gradient and central
/// finite differences of the oracle value along canonical directions:
///
/// ```text
/// max_i | (J(q + h e_i) - J(q - h e_i)) / (2h) - <g(q), e_i> | / (1 + |J(q)|)
/// ```
///
/// Exact quadratics give round-off-level defects (`<= 1e-8` at `h = 1e-5`);
/// an inconsistent gradient shows up at `0.1` or larger. Costs `2 n` value
/// queries, so reserve it for moderate dimensions.
pub fn finite_diff_defect<O: Oracle + ?Sized>(oracle: &O, q: &HVector, h: f64) -> f64 {
    assert!(h > 0.0, "finite-difference step must be positive");
    let g = oracle.gradient(q);
    let scale = 1.0 + oracle.value(q).abs();
    let w = q.weight();
    let mut worst = 0.0f64;
    let mut probe = q.clone();
    for i in 0..q.len() {
        let qi = q.as_slice()[i];
        probe.as_mut_slice()[i] = qi + h;
        let plus = oracle.value(&probe);
        probe.as_mut_slice()[i] = qi - h;
        let minus = oracle.value(&probe);
        probe.as_mut_slice()[i] = qi;
        let directional = (plus - minus) / (2.0 * h);
        // <g, e_i> in the weighted inner product.
        worst = worst.max((directional - w * g.as_slice()[i]).abs() / scale);
    }
    worst
}
