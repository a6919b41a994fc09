//! Weighted-grid Hilbert space primitives.
//!
//! A vector here is a grid function together with a quadrature weight `w > 0`;
//! the inner product is `<u, v> = w * sum_i u_i v_i`. With `w = 1/(n+1)` and
//! values sampled at interior nodes of a uniform grid on `(0, 1)` this is the
//! rectangle-rule approximation of the `L_2(0, 1)` inner product, which keeps
//! norms, Lipschitz constants and step sizes comparable across grid
//! refinements.
//!
//! Linear operators between two such spaces expose a forward and an adjoint
//! action. The adjoint must satisfy `<A q, lam> = <q, A* lam>` exactly at the
//! discrete level — [`adjoint_defect`] measures the violation and is the
//! first thing to check when a hand-derived adjoint misbehaves inside a
//! solver.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

// Redundant when a std build is in the crate graph, required for no_std.
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Shape of a weighted coefficient space: number of grid values and the
/// quadrature weight of the inner product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Space {
    pub len: usize,
    pub weight: f64,
}

impl Space {
    pub fn new(len: usize, weight: f64) -> Self {
        assert!(weight > 0.0, "quadrature weight must be positive, got {weight}");
        Space { len, weight }
    }

    /// Zero vector of this space.
    pub fn zeros(&self) -> HVector {
        HVector::zeros(self.len, self.weight)
    }

    /// Vector with entries drawn uniformly from `[-1, 1)`, deterministic in
    /// `seed`.
    pub fn random(&self, seed: u64) -> HVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..self.len).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        HVector { values, weight: self.weight }
    }
}

/// A grid function with its quadrature weight.
///
/// Arithmetic between vectors panics on mismatched length or weight: mixing
/// spaces is a programming error, not a data error.
#[derive(Debug, Clone, PartialEq)]
pub struct HVector {
    values: Vec<f64>,
    weight: f64,
}

impl HVector {
    pub fn new(values: Vec<f64>, weight: f64) -> Self {
        assert!(weight > 0.0, "quadrature weight must be positive, got {weight}");
        HVector { values, weight }
    }

    pub fn zeros(len: usize, weight: f64) -> Self {
        HVector::new(vec![0.0; len], weight)
    }

    pub fn from_fn(len: usize, weight: f64, mut f: impl FnMut(usize) -> f64) -> Self {
        HVector::new((0..len).map(&mut f).collect(), weight)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn space(&self) -> Space {
        Space { len: self.len(), weight: self.weight }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn assert_compatible(&self, other: &HVector) {
        assert_eq!(self.len(), other.len(), "vector length mismatch");
        assert!(
            self.weight == other.weight,
            "vector weight mismatch: {} vs {}",
            self.weight,
            other.weight
        );
    }

    /// Weighted inner product `w * sum_i u_i v_i`.
    pub fn inner(&self, other: &HVector) -> f64 {
        self.assert_compatible(other);
        let mut acc = 0.0;
        for (a, b) in self.values.iter().zip(&other.values) {
            acc += a * b;
        }
        self.weight * acc
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `||self - other||` in the weighted norm.
    pub fn dist(&self, other: &HVector) -> f64 {
        self.assert_compatible(other);
        let mut acc = 0.0;
        for (a, b) in self.values.iter().zip(&other.values) {
            let d = a - b;
            acc += d * d;
        }
        (self.weight * acc).sqrt()
    }

    /// Maximum absolute entry difference (unweighted sup norm).
    pub fn linf_dist(&self, other: &HVector) -> f64 {
        self.assert_compatible(other);
        let mut m = 0.0f64;
        for (a, b) in self.values.iter().zip(&other.values) {
            m = m.max((a - b).abs());
        }
        m
    }

    pub fn scaled(&self, s: f64) -> HVector {
        HVector::new(self.values.iter().map(|v| v * s).collect(), self.weight)
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &HVector) {
        self.assert_compatible(x);
        for (s, v) in self.values.iter_mut().zip(&x.values) {
            *s += a * v;
        }
    }

    /// `a * x + b * y` without intermediate allocations.
    pub fn lincomb(a: f64, x: &HVector, b: f64, y: &HVector) -> HVector {
        x.assert_compatible(y);
        let values = x.values.iter().zip(&y.values).map(|(u, v)| a * u + b * v).collect();
        HVector::new(values, x.weight)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl Add for &HVector {
    type Output = HVector;
    fn add(self, rhs: &HVector) -> HVector {
        HVector::lincomb(1.0, self, 1.0, rhs)
    }
}

impl Sub for &HVector {
    type Output = HVector;
    fn sub(self, rhs: &HVector) -> HVector {
        HVector::lincomb(1.0, self, -1.0, rhs)
    }
}

impl Mul<f64> for &HVector {
    type Output = HVector;
    fn mul(self, s: f64) -> HVector {
        self.scaled(s)
    }
}

impl Neg for &HVector {
    type Output = HVector;
    fn neg(self) -> HVector {
        self.scaled(-1.0)
    }
}

/// A bounded linear operator `A: domain -> range` with an explicit adjoint.
pub trait LinearOperator {
    fn domain(&self) -> Space;
    fn range(&self) -> Space;
    fn apply(&self, q: &HVector) -> HVector;
    fn apply_adjoint(&self, lam: &HVector) -> HVector;
}

/// Dense matrix operator (row-major coefficients). The adjoint is the
/// transpose rescaled by the weight ratio, so the discrete adjoint identity
/// holds exactly whatever the two quadrature weights are.
#[derive(Debug, Clone)]
pub struct MatrixOperator {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    domain: Space,
    range: Space,
}

impl MatrixOperator {
    /// `entries` holds `rows * cols` coefficients, row-major.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>, domain_weight: f64, range_weight: f64) -> Self {
        assert_eq!(entries.len(), rows * cols, "matrix entry count mismatch");
        MatrixOperator {
            rows,
            cols,
            entries,
            domain: Space::new(cols, domain_weight),
            range: Space::new(rows, range_weight),
        }
    }

    /// Square matrix with unit weights on both sides.
    pub fn square(n: usize, entries: Vec<f64>) -> Self {
        MatrixOperator::new(n, n, entries, 1.0, 1.0)
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }
}

impl LinearOperator for MatrixOperator {
    fn domain(&self) -> Space {
        self.domain
    }

    fn range(&self) -> Space {
        self.range
    }

    fn apply(&self, q: &HVector) -> HVector {
        assert_eq!(q.len(), self.cols, "operator input length mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.entries[i * self.cols..(i + 1) * self.cols];
            let mut acc = 0.0;
            for (m, v) in row.iter().zip(q.as_slice()) {
                acc += m * v;
            }
            out[i] = acc;
        }
        HVector::new(out, self.range.weight)
    }

    fn apply_adjoint(&self, lam: &HVector) -> HVector {
        assert_eq!(lam.len(), self.rows, "operator adjoint input length mismatch");
        // <Aq, lam>_range = <q, A* lam>_domain forces the weight ratio below.
        let scale = self.range.weight / self.domain.weight;
        let mut out = vec![0.0; self.cols];
        for (i, l) in lam.as_slice().iter().enumerate() {
            let row = &self.entries[i * self.cols..(i + 1) * self.cols];
            for (o, m) in out.iter_mut().zip(row) {
                *o += m * l * scale;
            }
        }
        HVector::new(out, self.domain.weight)
    }
}

/// Diagonal operator on a single space; self-adjoint by construction.
#[derive(Debug, Clone)]
pub struct DiagonalOperator {
    diag: Vec<f64>,
    space: Space,
}

impl DiagonalOperator {
    pub fn new(diag: Vec<f64>, weight: f64) -> Self {
        let space = Space::new(diag.len(), weight);
        DiagonalOperator { diag, space }
    }

    pub fn identity(n: usize, weight: f64) -> Self {
        DiagonalOperator::new(vec![1.0; n], weight)
    }
}

impl LinearOperator for DiagonalOperator {
    fn domain(&self) -> Space {
        self.space
    }

    fn range(&self) -> Space {
        self.space
    }

    fn apply(&self, q: &HVector) -> HVector {
        assert_eq!(q.len(), self.diag.len(), "operator input length mismatch");
        let values = self.diag.iter().zip(q.as_slice()).map(|(d, v)| d * v).collect();
        HVector::new(values, self.space.weight)
    }

    fn apply_adjoint(&self, lam: &HVector) -> HVector {
        self.apply(lam)
    }
}

/// Result of the power-method estimate of `||A||^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorNormEstimate {
    /// Final Rayleigh quotient `||A v||^2 / ||v||^2`. Always a lower bound on
    /// the true `||A||^2` (up to round-off) because Rayleigh quotients of
    /// `A*A` never exceed its largest eigenvalue.
    pub value: f64,
    /// Whether successive Rayleigh quotients agreed to the requested relative
    /// tolerance before the iteration cap.
    pub converged: bool,
    pub iterations: usize,
}

/// Default relative tolerance for [`operator_norm_sq`].
pub const NORM_EST_TOL: f64 = 1e-6;
/// Default iteration cap for [`operator_norm_sq`].
pub const NORM_EST_MAX_ITER: usize = 10_000;

/// Power-method estimate of the squared operator norm `||A||^2` (largest
/// eigenvalue of `A*A`), with a seeded random start vector.
pub fn operator_norm_sq<A: LinearOperator + ?Sized>(op: &A, seed: u64) -> OperatorNormEstimate {
    operator_norm_sq_with(op, seed, NORM_EST_TOL, NORM_EST_MAX_ITER)
}

/// [`operator_norm_sq`] with explicit stopping parameters.
pub fn operator_norm_sq_with<A: LinearOperator + ?Sized>(
    op: &A,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> OperatorNormEstimate {
    let mut v = op.domain().random(seed);
    let n = v.norm();
    if n == 0.0 || op.domain().len == 0 {
        return OperatorNormEstimate { value: 0.0, converged: true, iterations: 0 };
    }
    v = v.scaled(1.0 / n);

    let mut prev = f64::NAN;
    for it in 1..=max_iter {
        let av = op.apply(&v);
        let lam = av.norm_sq() / v.norm_sq();
        if lam == 0.0 {
            // v is in the kernel; a random vector in the kernel of a nonzero
            // operator has probability zero, treat the operator as zero.
            return OperatorNormEstimate { value: 0.0, converged: true, iterations: it };
        }
        if prev.is_finite() && (lam - prev).abs() <= tol * lam.abs().max(f64::MIN_POSITIVE) {
            return OperatorNormEstimate { value: lam, converged: true, iterations: it };
        }
        prev = lam;
        let w = op.apply_adjoint(&av);
        let wn = w.norm();
        if wn == 0.0 || !wn.is_finite() {
            return OperatorNormEstimate { value: lam, converged: false, iterations: it };
        }
        v = w.scaled(1.0 / wn);
    }
    OperatorNormEstimate { value: prev, converged: false, iterations: max_iter }
}

/// Largest normalized violation of the adjoint identity
/// `|<Aq, lam> - <q, A* lam>| / (||q|| ||lam|| sqrt(L))` over `trials`
/// seeded random pairs, where `L` is the power-method estimate of `||A||^2`.
///
/// Exactly transposed discrete adjoints give round-off-level defects
/// (`<= 1e-12`); a wrong sign or stencil shows up at `0.1` or larger.
pub fn adjoint_defect<A: LinearOperator + ?Sized>(op: &A, trials: usize, seed: u64) -> f64 {
    let scale_sq = operator_norm_sq(op, seed ^ 0x517c_c1b7_2722_0a95).value.max(0.0);
    let scale = scale_sq.sqrt().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for t in 0..trials {
        let q = op.domain().random(seed.wrapping_add(2 * t as u64 + 1));
        let lam = op.range().random(seed.wrapping_add(2 * t as u64 + 2));
        let qn = q.norm();
        let ln = lam.norm();
        if qn == 0.0 || ln == 0.0 {
            continue;
        }
        let lhs = op.apply(&q).inner(&lam);
        let rhs = q.inner(&op.apply_adjoint(&lam));
        worst = worst.max((lhs - rhs).abs() / (qn * ln * scale));
    }
    worst
}
