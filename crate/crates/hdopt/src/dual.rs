//! Equality-constrained minimization through the dual objective.
//!
//! For `g(q) -> min` subject to `A q = f`, with `g` strongly convex (modulus
//! `sigma`), the dual objective
//!
//! `phi(lambda) = max_q { <lambda, A q - f> - g(q) } = <lambda, A q(lambda) - f> - g(q(lambda))`
//!
//! is convex and smooth; its gradient is the constraint residual
//! `A q(lambda) - f` at the responder point `q(lambda)`, and its Lipschitz
//! constant is `||A||^2 / sigma`. Running a weighted-averaging first-order
//! method on `phi` from `lambda = 0` yields, as a by-product of the gradient
//! queries it already makes, the weighted average
//!
//! `qbar^N = sum_k (alpha_k / A_N) q(y^k)`
//!
//! over the query points `y^k`. Weak duality (`-phi(lambda) <= g(q*)` for
//! every `lambda`) gives the computable certificate
//! `g(qbar^N) - g(q*) <= phi(lambda^N) + g(qbar^N)`, and by linearity the
//! averaged residual equals `A qbar^N - f`, so the feasibility of `qbar^N`
//! also needs no extra operator application. [`solve_dual`] stops once
//!
//! `phi(lambda^N) + g(qbar^N) <= eps` and `||A qbar^N - f|| <= eps_tilde`,
//!
//! which the accelerated methods reach within about
//! `6 max{ sqrt(L Rt^2 / eps), sqrt(L Rt / eps_tilde) }` iterations (the
//! averaged gradient method within `3 max{ L Rt^2 / eps, L Rt / eps_tilde }`),
//! where `Rt` is the norm of the smallest dual solution.
//!
//! [`solve_dual_regularized`] instead adds a Tikhonov term
//! `(mu/2) ||lambda||^2` with `mu = eps / (2 Rt^2)` and runs the
//! strongly-convex accelerated method, stopping at an iterate `lambda` once
//!
//! `||lambda|| ||A q(lambda) - f|| <= eps` and `||A q(lambda) - f|| <= eps_tilde`;
//!
//! the product bounds the primal suboptimality `g(q(lambda)) - g(q*)`
//! directly. `Rt` being unknown, the guess doubles whenever an attempt's
//! budget expires without the rule holding.

use core::cell::RefCell;

use crate::hilbert::{operator_norm_sq, HVector, LinearOperator, Space};
use crate::oracle::{Oracle, OracleInfo};
use crate::solvers::{
    astm_with, gd_with, require_positive, stm_with, AttemptRecord, GdStep, Hooks, IterationInfo,
    Observed, RunLog, StopRule, TerminalStatus,
};
use crate::{Error, Result};

// Redundant when a std build is in the crate graph, required for no_std.
#[allow(unused_imports)]
use num_traits::Float;

/// Fixed seed for the power-method estimate of `||A||^2`, so identical
/// problems always produce bit-identical step sizes.
const NORM_SEED: u64 = 0x00A0_52ED;

/// Strongly-convex objective with an affine constraint, `g(q) -> min` over
/// `A q = f`, presented through the pieces the dual construction needs.
///
/// Implementations must keep `g` strongly convex with the declared modulus;
/// that is what makes the responder single-valued and the dual smooth.
pub trait DualProblem {
    /// Constraint operator `A`.
    fn operator(&self) -> &dyn LinearOperator;

    /// Constraint right-hand side `f`, in the range space of `A`.
    fn data(&self) -> &HVector;

    /// `argmax_q { <s, q> - g(q) }`, the gradient of the convex conjugate of
    /// `g`; unique because `g` is strongly convex.
    fn conjugate_argmax(&self, s: &HVector) -> HVector;

    /// `g(q)`.
    fn g_value(&self, q: &HVector) -> f64;

    /// Strong-convexity modulus `sigma` of `g` in the domain-space norm.
    fn strong_convexity(&self) -> f64 {
        1.0
    }

    /// Responder `q(lambda)`: the primal point attaining the dual value at
    /// `lambda`.
    fn responder(&self, lambda: &HVector) -> HVector {
        let q = self.conjugate_argmax(&self.operator().apply_adjoint(lambda));
        debug_assert_eq!(q.len(), self.operator().domain().len, "responder output length");
        q
    }
}

impl<P: DualProblem + ?Sized> DualProblem for &P {
    fn operator(&self) -> &dyn LinearOperator {
        (**self).operator()
    }
    fn data(&self) -> &HVector {
        (**self).data()
    }
    fn conjugate_argmax(&self, s: &HVector) -> HVector {
        (**self).conjugate_argmax(s)
    }
    fn g_value(&self, q: &HVector) -> f64 {
        (**self).g_value(q)
    }
    fn strong_convexity(&self) -> f64 {
        (**self).strong_convexity()
    }
}

/// Minimum-norm problem `1/2 ||q||^2 -> min` over `A q = f`.
///
/// The responder is `q(lambda) = A* lambda` and the dual objective reduces to
/// `1/2 ||A* lambda||^2 - <f, lambda>`, whose minimizers solve
/// `A A* lambda = f`; the recovered primal is then the minimum-norm
/// (pseudo-inverse) solution `A* (A A*)^{-1} f`. The system must be
/// compatible — `f` in the range of `A` — otherwise the dual is unbounded
/// below and runs diverge; compatibility is the caller's assertion.
pub struct MinNorm<A> {
    a: A,
    f: HVector,
}

/// Builds the minimum-norm constrained problem after checking that `f` lives
/// in the range space of `A`.
pub fn min_norm_dual<A: LinearOperator>(a: A, f: HVector) -> Result<MinNorm<A>> {
    let range = a.range();
    if f.len() != range.len {
        return Err(Error::DimensionMismatch {
            expected: range.len,
            got: f.len(),
            what: "constraint data",
        });
    }
    if f.weight() != range.weight {
        return Err(Error::bad_param("f", "data weight must match the operator range"));
    }
    Ok(MinNorm { a, f })
}

impl<A: LinearOperator> DualProblem for MinNorm<A> {
    fn operator(&self) -> &dyn LinearOperator {
        &self.a
    }
    fn data(&self) -> &HVector {
        &self.f
    }
    fn conjugate_argmax(&self, s: &HVector) -> HVector {
        s.clone()
    }
    fn g_value(&self, q: &HVector) -> f64 {
        0.5 * q.norm_sq()
    }
}

struct CachedQuery {
    lambda: HVector,
    primal: HVector,
    residual: HVector,
}

/// First-order oracle for the dual objective (optionally Tikhonov-shifted).
///
/// Each gradient query at `lambda` computes the responder `q(lambda)` and the
/// residual `A q(lambda) - f`; both are remembered so that an observer can
/// fold them into the primal average without repeating the evaluation. One
/// value or gradient query costs one responder call plus one application of
/// `A` (`value_and_gradient` shares them).
pub struct DualOracle<'p, P: DualProblem + ?Sized> {
    problem: &'p P,
    l_base: f64,
    mu: f64,
    cache: RefCell<Option<CachedQuery>>,
}

/// Builds the dual first-order oracle. Its Lipschitz hint
/// `||A||^2 / sigma` comes from a deterministic power-method estimate.
pub fn dual_oracle<P: DualProblem + ?Sized>(problem: &P) -> DualOracle<'_, P> {
    DualOracle::with_parts(problem, 0.0, dual_l_estimate(problem))
}

/// [`dual_oracle`] plus a Tikhonov term `(mu/2) ||lambda||^2`, making the
/// dual `mu`-strongly convex.
pub fn dual_oracle_regularized<P: DualProblem + ?Sized>(
    problem: &P,
    mu: f64,
) -> Result<DualOracle<'_, P>> {
    require_positive(mu, "mu")?;
    Ok(DualOracle::with_parts(problem, mu, dual_l_estimate(problem)))
}

fn dual_l_estimate<P: DualProblem + ?Sized>(problem: &P) -> f64 {
    operator_norm_sq(problem.operator(), NORM_SEED).value / problem.strong_convexity()
}

impl<'p, P: DualProblem + ?Sized> DualOracle<'p, P> {
    fn with_parts(problem: &'p P, mu: f64, l_base: f64) -> Self {
        DualOracle { problem, mu, l_base, cache: RefCell::new(None) }
    }

    /// Lipschitz estimate `||A||^2 / sigma` of the unregularized dual.
    pub fn l_estimate(&self) -> f64 {
        self.l_base
    }

    /// Responder output and constraint residual at `lambda`.
    fn respond(&self, lambda: &HVector) -> (HVector, HVector) {
        let primal = self.problem.responder(lambda);
        let mut residual = self.problem.operator().apply(&primal);
        residual.axpy(-1.0, self.problem.data());
        (primal, residual)
    }

    fn phi(&self, lambda: &HVector, primal: &HVector, residual: &HVector) -> f64 {
        let mut v = lambda.inner(residual) - self.problem.g_value(primal);
        if self.mu > 0.0 {
            v += 0.5 * self.mu * lambda.norm_sq();
        }
        v
    }

    fn regularized_gradient(&self, lambda: &HVector, residual: &HVector) -> HVector {
        let mut grad = residual.clone();
        if self.mu > 0.0 {
            grad.axpy(self.mu, lambda);
        }
        grad
    }

    fn remember(&self, lambda: &HVector, primal: HVector, residual: HVector) {
        *self.cache.borrow_mut() = Some(CachedQuery { lambda: lambda.clone(), primal, residual });
    }

    /// Consumes the remembered responder output if it was produced at
    /// exactly this point.
    fn take_cached(&self, point: &HVector) -> Option<(HVector, HVector)> {
        let mut slot = self.cache.borrow_mut();
        match slot.take() {
            Some(c) if c.lambda.as_slice() == point.as_slice() => Some((c.primal, c.residual)),
            other => {
                *slot = other;
                None
            }
        }
    }
}

impl<P: DualProblem + ?Sized> Oracle for DualOracle<'_, P> {
    fn space(&self) -> Space {
        self.problem.operator().range()
    }

    fn value(&self, lambda: &HVector) -> f64 {
        let (primal, residual) = self.respond(lambda);
        self.phi(lambda, &primal, &residual)
    }

    fn gradient(&self, lambda: &HVector) -> HVector {
        let (primal, residual) = self.respond(lambda);
        let grad = self.regularized_gradient(lambda, &residual);
        self.remember(lambda, primal, residual);
        grad
    }

    fn value_and_gradient(&self, lambda: &HVector) -> (f64, HVector) {
        let (primal, residual) = self.respond(lambda);
        let value = self.phi(lambda, &primal, &residual);
        let grad = self.regularized_gradient(lambda, &residual);
        self.remember(lambda, primal, residual);
        (value, grad)
    }

    fn info(&self) -> OracleInfo {
        OracleInfo {
            l_hint: Some(self.l_base + self.mu),
            mu_hint: (self.mu > 0.0).then_some(self.mu),
            delta: 0.0,
            j_star: None,
        }
    }
}

/// Weighted average of responder outputs over a solver's gradient queries.
///
/// Accumulates `sum_k alpha_k q(y^k)` and, in parallel, the identically
/// weighted residual sum; by linearity the latter equals
/// `A qbar - f` times the total weight, so the feasibility of the recovered
/// point never needs an extra operator application.
pub struct PrimalRecovery {
    q_sum: HVector,
    residual_sum: HVector,
    weight: f64,
}

impl PrimalRecovery {
    pub fn new(domain: Space, range: Space) -> Self {
        PrimalRecovery { q_sum: domain.zeros(), residual_sum: range.zeros(), weight: 0.0 }
    }

    /// Folds one query: responder output, residual at it, and its weight.
    pub fn push(&mut self, primal: &HVector, residual: &HVector, alpha: f64) {
        self.q_sum.axpy(alpha, primal);
        self.residual_sum.axpy(alpha, residual);
        self.weight += alpha;
    }

    pub fn is_empty(&self) -> bool {
        self.weight == 0.0
    }

    /// Total accumulated weight (the solver's `A_N`).
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// `qbar = sum_k alpha_k q(y^k) / A_N`. Meaningful only after at least
    /// one push.
    pub fn average(&self) -> HVector {
        self.q_sum.scaled(1.0 / self.weight)
    }

    /// `||A qbar - f||`.
    pub fn feasibility(&self) -> f64 {
        self.residual_sum.norm() / self.weight
    }
}

/// Methods carrying the weighted-averaging certificate. The plain
/// last-iterate gradient method is deliberately absent: only its averaged
/// variant produces a usable primal average.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DualMethod {
    /// Accelerated method with a known Lipschitz constant (the oracle's
    /// power-method estimate).
    Stm,
    /// Backtracking accelerated method; no constant required.
    Astm,
    /// Fixed-step gradient descent on the dual, reporting the running
    /// average of its trajectory.
    GdAveraged,
}

/// Output of a dual run: the recovered primal point, the final dual iterate,
/// and the full iteration log (feasibility column populated).
pub struct DualSolution {
    pub primal: HVector,
    pub dual: HVector,
    pub log: RunLog,
}

/// Runs `method` on the dual objective from `lambda = 0`, recovering the
/// primal as the weighted average of responder outputs, until
/// `phi(lambda^N) + g(qbar^N) <= eps` and `||A qbar^N - f|| <= eps_tilde`
/// hold together, or `max_iter` iterations pass (then the log ends
/// [`TerminalStatus::BudgetExhausted`] and the pair is best-so-far).
pub fn solve_dual<P: DualProblem + ?Sized>(
    problem: &P,
    method: DualMethod,
    eps: f64,
    eps_tilde: f64,
    max_iter: usize,
) -> Result<DualSolution> {
    require_positive(eps, "eps")?;
    require_positive(eps_tilde, "eps_tilde")?;

    let oracle = dual_oracle(problem);
    let lambda0 = problem.operator().range().zeros();
    let mut recovery =
        PrimalRecovery::new(problem.operator().domain(), problem.operator().range());
    let rule = StopRule::MaxIter(max_iter);

    let result = {
        let mut observer = |info: &IterationInfo<'_>| {
            if let Some((point, alpha)) = info.query {
                // The cache always holds this query for the methods above;
                // recomputing is a correctness fallback for foreign methods
                // (its cost is then invisible to the evaluation counters).
                let (primal, residual) =
                    oracle.take_cached(point).unwrap_or_else(|| oracle.respond(point));
                recovery.push(&primal, &residual, alpha);
            }
            if recovery.is_empty() {
                return Observed::proceed();
            }
            let gap = info.value + problem.g_value(&recovery.average());
            let feasibility = recovery.feasibility();
            Observed { stop: gap <= eps && feasibility <= eps_tilde, feasibility: Some(feasibility) }
        };
        let mut hooks = Hooks::with_observer(&mut observer);
        match method {
            DualMethod::Stm => {
                stm_with(&oracle, &lambda0, oracle.l_estimate(), 0.0, &rule, &mut hooks)?
            }
            DualMethod::Astm => astm_with(&oracle, &lambda0, 0.0, &rule, &mut hooks)?,
            DualMethod::GdAveraged => {
                gd_with(&oracle, &lambda0, GdStep::Fixed(oracle.l_estimate()), true, &rule, &mut hooks)?
            }
        }
    };

    let primal = if recovery.is_empty() {
        problem.operator().domain().zeros()
    } else {
        recovery.average()
    };
    Ok(DualSolution { primal, dual: result.solution, log: result.log })
}

/// Iteration cap for one regularized attempt: the strongly-convex method
/// needs `O(sqrt(L/mu) log(..))` iterations to push the residual under the
/// thresholds when the norm guess is adequate.
fn attempt_budget(l_tot: f64, mu: f64, r: f64, eps: f64, eps_tilde: f64) -> usize {
    let target = eps.min(eps_tilde * eps_tilde / l_tot).max(f64::MIN_POSITIVE);
    let ln_term = (10.0 * l_tot * (r * r + 1.0) / target).ln().max(1.0);
    let cap = 8.0 * (l_tot / mu).sqrt() * ln_term;
    if cap >= 1e18 {
        usize::MAX
    } else {
        cap as usize + 100
    }
}

/// Relative gradient floor below which an attempt's iterate counts as
/// numerically at the regularized optimum, so the stopping pair is decided
/// and a failed attempt can move on to the next norm guess.
const ATTEMPT_SETTLED_REL: f64 = 1e-9;

/// Maximum number of times the dual-norm guess doubles before giving up.
const MAX_GUESS_DOUBLINGS: usize = 60;

/// Solves `g(q) -> min` over `A q = f` through the Tikhonov-regularized dual.
///
/// Sets `mu = eps / (2 r^2)` from the current guess `r` of the dual-solution
/// norm, runs the strongly-convex accelerated method on the regularized dual
/// from `lambda = 0`, and stops at the first iterate where
/// `||lambda|| ||A q(lambda) - f|| <= eps` (that product bounds
/// `g(q(lambda)) - g(q*)`) and `||A q(lambda) - f|| <= eps_tilde`. If an
/// attempt's budget expires — or its iterate settles at the regularized
/// optimum with the rule still failing — the guess doubles and the method
/// restarts from zero, at most [`MAX_GUESS_DOUBLINGS`] times.
///
/// Each iteration spends one extra responder-plus-operator evaluation probing
/// the rule at the current iterate; those probes are charged to the gradient
/// counter at attempt boundaries. One [`AttemptRecord`] per guess lands in
/// `log.attempts` (`c` = guess, `tau` = Tikhonov weight, `achieved` = final
/// product `||lambda|| ||A q(lambda) - f||`, `work` = iterations used). The
/// `feasibility` column stores `||A q(lambda^k) - f||`.
pub fn solve_dual_regularized<P: DualProblem + ?Sized>(
    problem: &P,
    eps: f64,
    eps_tilde: f64,
    r_tilde_guess: f64,
) -> Result<DualSolution> {
    require_positive(eps, "eps")?;
    require_positive(eps_tilde, "eps_tilde")?;
    require_positive(r_tilde_guess, "r_tilde_guess")?;

    let l_base = dual_l_estimate(problem);
    let lambda0 = problem.operator().range().zeros();
    let mut log = RunLog::new();
    let mut fallback: Option<(HVector, HVector)> = None;
    let mut r = r_tilde_guess;

    for _ in 0..=MAX_GUESS_DOUBLINGS {
        let mu = eps / (2.0 * r * r);
        let oracle = DualOracle::with_parts(problem, mu, l_base);
        let l_tot = l_base + mu;
        let budget = attempt_budget(l_tot, mu, r, eps, eps_tilde);

        let mut probes: u64 = 0;
        let mut rule_met = false;
        let mut last: Option<(HVector, f64)> = None;
        let result = {
            let mut observer = |info: &IterationInfo<'_>| {
                let primal = problem.responder(info.q);
                let mut residual = problem.operator().apply(&primal);
                residual.axpy(-1.0, problem.data());
                let feasibility = residual.norm();
                probes += 1;
                let bound = info.q.norm() * feasibility;
                last = Some((primal, bound));
                if bound <= eps && feasibility <= eps_tilde {
                    rule_met = true;
                    return Observed { stop: true, feasibility: Some(feasibility) };
                }
                // Settled at the regularized optimum with the rule failing:
                // nothing further can change this attempt's outcome.
                let settled = info.k > 0
                    && info.grad_norm <= ATTEMPT_SETTLED_REL * mu * (1.0 + info.q.norm());
                Observed { stop: settled, feasibility: Some(feasibility) }
            };
            let mut hooks = Hooks::with_observer(&mut observer);
            stm_with(&oracle, &lambda0, l_tot, mu, &StopRule::MaxIter(budget), &mut hooks)?
        };

        let iterations = result.log.iterations();
        let (primal, bound) = last.take().expect("a run always records at least one row");
        log.append_continued(result.log, 0, probes);
        log.attempts.push(AttemptRecord {
            c: r,
            tau: mu,
            budget,
            achieved: bound,
            work: iterations as f64,
            success: rule_met,
        });

        if rule_met {
            log.set_status(TerminalStatus::Converged);
            return Ok(DualSolution { primal, dual: result.solution, log });
        }
        fallback = Some((primal, result.solution));
        r *= 2.0;
    }

    let (primal, dual) =
        fallback.expect("at least one attempt ran; each records a stopping probe");
    log.set_status(TerminalStatus::BudgetExhausted);
    Ok(DualSolution { primal, dual, log })
}
