//! Similar-triangles accelerated scheme, with fixed and backtracking step
//! constants.
//!
//! Both solvers maintain three coupled sequences. With `A_0 = alpha_0 = 1/L`
//! and `q^0 = u^0 = y^0 - alpha_0 grad J(y^0)`:
//!
//! ```text
//! alpha_{k+1}: positive root of  L alpha^2 = (alpha + A_k)(1 + A_k mu)
//! A_{k+1} = A_k + alpha_{k+1}
//! y^{k+1} = (alpha_{k+1} u^k + A_k q^k) / A_{k+1}
//! u^{k+1} = [(1 + A_k mu) u^k + alpha_{k+1} (mu y^{k+1} - grad J(y^{k+1}))]
//!           / (1 + A_{k+1} mu)
//! q^{k+1} = (alpha_{k+1} u^{k+1} + A_k q^k) / A_{k+1}
//! ```
//!
//! For `mu = 0` the `u` update reduces to the plain step
//! `u^{k+1} = u^k - alpha_{k+1} grad J(y^{k+1})` and the scheme attains
//! `J(q^N) - J* <= 4 L R^2 / N^2` with `R = ||y^0 - q*||`. For `mu > 0` the
//! damped update is the minimizer of the running lower model with curvature
//! `1 + A_k mu`, and the rate improves to
//! `min{4 L R^2 / N^2, L R^2 exp(-(N/2) sqrt(mu / (2 L)))}`.
//!
//! The backtracking variant certifies each accepted constant through the
//! descent test `J(q) <= J(y) + <grad J(y), q - y> + (L/2) ||q - y||^2`,
//! widened by `2 delta` when the oracle declares inexactness `delta`; it
//! needs no Lipschitz input, costs two value and one gradient query per
//! trial, and satisfies `J(q^N) - J* <= 8 L R^2 / N^2`.

use alloc::borrow::ToOwned;

use super::{
    check_start, require_nonnegative, require_positive, Hooks, IterationInfo, Recorder,
    SolveResult, StopRule, TerminalStatus,
};
use crate::hilbert::HVector;
use crate::oracle::{Counted, Oracle};

// Redundant when a std build is in the crate graph, required for no_std.
#[allow(unused_imports)]
use num_traits::Float;

/// Positive root of `l * alpha^2 = (alpha + a)(1 + a * mu)`.
fn alpha_root(l: f64, a: f64, mu: f64) -> f64 {
    let s = 1.0 + a * mu;
    let half = s / (2.0 * l);
    half + (half * half + a * s / l).sqrt()
}

/// `u` update shared by both solvers; reduces to `u - alpha g` when `mu = 0`.
fn damped_u(u: &HVector, y: &HVector, g: &HVector, alpha: f64, a_prev: f64, mu: f64) -> HVector {
    let mut next = u.scaled(1.0 + a_prev * mu);
    next.axpy(alpha * mu, y);
    next.axpy(-alpha, g);
    if mu > 0.0 {
        next = next.scaled(1.0 / (1.0 + (a_prev + alpha) * mu));
    }
    next
}

/// Accelerated scheme at a trusted gradient Lipschitz constant `l`; pass
/// `mu > 0` to exploit strong convexity. See the module docs for rates.
pub fn stm<O: Oracle + ?Sized>(
    oracle: &O,
    y0: &HVector,
    l: f64,
    mu: f64,
    stop: &StopRule,
) -> crate::Result<SolveResult> {
    stm_with(oracle, y0, l, mu, stop, &mut Hooks::default())
}

/// [`stm`] with instrumentation hooks.
pub fn stm_with<O: Oracle + ?Sized>(
    oracle: &O,
    y0: &HVector,
    l: f64,
    mu: f64,
    stop: &StopRule,
    hooks: &mut Hooks<'_, '_>,
) -> crate::Result<SolveResult> {
    check_start(oracle, y0)?;
    require_positive(l, "l")?;
    require_nonnegative(mu, "mu")?;
    let mut counted = Counted::new(oracle);
    let mut rec = Recorder::new(stop, hooks)?;

    let alpha0 = 1.0 / l;
    let g0 = counted.gradient(y0);
    let mut q = y0.clone();
    q.axpy(-alpha0, &g0);
    let mut u = q.clone();
    let mut a_total = alpha0;

    let value0 = counted.value(&q);
    let info = IterationInfo {
        k: 0,
        value: value0,
        grad_norm: g0.norm(),
        alpha: alpha0,
        a_k: a_total,
        l_used: l,
        y: y0,
        u: &u,
        q: &q,
        query: Some((y0, alpha0)),
    };
    if let Some(status) = rec.record(&mut counted, &info) {
        return Ok(SolveResult { solution: q, log: rec.into_log(status) });
    }

    let mut k = 0usize;
    let status = loop {
        k += 1;
        let alpha = alpha_root(l, a_total, mu);
        let a_next = a_total + alpha;
        let y = HVector::lincomb(alpha / a_next, &u, a_total / a_next, &q);
        let g = counted.gradient(&y);
        u = damped_u(&u, &y, &g, alpha, a_total, mu);
        q = HVector::lincomb(alpha / a_next, &u, a_total / a_next, &q);
        a_total = a_next;
        let value = counted.value(&q);
        let info = IterationInfo {
            k,
            value,
            grad_norm: g.norm(),
            alpha,
            a_k: a_total,
            l_used: l,
            y: &y,
            u: &u,
            q: &q,
            query: Some((&y, alpha)),
        };
        if let Some(status) = rec.record(&mut counted, &info) {
            break status;
        }
    };
    Ok(SolveResult { solution: q, log: rec.into_log(status) })
}

/// Backtracking accelerated scheme: no Lipschitz constant required.
///
/// Starts its constant search at 1, doubling until the descent test holds;
/// each later iteration restarts from half the last accepted constant. A
/// declared oracle inexactness `delta` widens the test by `2 delta`. Runs
/// end with [`TerminalStatus::LineSearchFailed`] if any single search needs
/// more than 60 doublings.
pub fn astm<O: Oracle + ?Sized>(
    oracle: &O,
    y0: &HVector,
    mu: f64,
    stop: &StopRule,
) -> crate::Result<SolveResult> {
    astm_with(oracle, y0, mu, stop, &mut Hooks::default())
}

const L_FLOOR: f64 = 1e-30;
const MAX_DOUBLINGS: usize = 60;

/// Descent test `J(q) <= J(y) + <g, q - y> + (l/2)||q - y||^2 + 2 delta`,
/// cushioned against round-off in the comparison itself.
fn descent_ok(jy: f64, jq: f64, gd: f64, dist_sq: f64, l: f64, two_delta: f64) -> bool {
    if !(jy.is_finite() && jq.is_finite() && gd.is_finite() && dist_sq.is_finite()) {
        return false;
    }
    let model = jy + gd + 0.5 * l * dist_sq + two_delta;
    let cushion = 4.0 * f64::EPSILON * (jy.abs() + jq.abs() + gd.abs());
    jq <= model + cushion
}

/// [`astm`] with instrumentation hooks.
pub fn astm_with<O: Oracle + ?Sized>(
    oracle: &O,
    y0: &HVector,
    mu: f64,
    stop: &StopRule,
    hooks: &mut Hooks<'_, '_>,
) -> crate::Result<SolveResult> {
    check_start(oracle, y0)?;
    require_nonnegative(mu, "mu")?;
    let two_delta = 2.0 * oracle.info().delta.max(0.0);
    let mut counted = Counted::new(oracle);
    let mut rec = Recorder::new(stop, hooks)?;

    // Initialization searches upward from l = 1 for a constant that
    // certifies the first step q^0 = y^0 - (1/l) grad J(y^0).
    let (jy0, g0) = counted.value_and_gradient(y0);
    if !(jy0.is_finite() && g0.is_finite()) {
        return Ok(SolveResult {
            solution: y0.to_owned(),
            log: rec.into_log(TerminalStatus::NonFinite),
        });
    }
    let mut l = 1.0;
    let mut doublings = 0usize;
    let (mut q, mut value) = loop {
        let mut cand = y0.clone();
        cand.axpy(-1.0 / l, &g0);
        let jq = counted.value(&cand);
        let diff = &cand - y0;
        if descent_ok(jy0, jq, g0.inner(&diff), diff.norm_sq(), l, two_delta) {
            break (cand, jq);
        }
        if doublings == MAX_DOUBLINGS {
            return Ok(SolveResult {
                solution: y0.to_owned(),
                log: rec.into_log(TerminalStatus::LineSearchFailed),
            });
        }
        doublings += 1;
        l *= 2.0;
    };
    let mut u = q.clone();
    let mut a_total = 1.0 / l;

    let info = IterationInfo {
        k: 0,
        value,
        grad_norm: g0.norm(),
        alpha: a_total,
        a_k: a_total,
        l_used: l,
        y: y0,
        u: &u,
        q: &q,
        query: Some((y0, a_total)),
    };
    if let Some(status) = rec.record(&mut counted, &info) {
        return Ok(SolveResult { solution: q, log: rec.into_log(status) });
    }

    let mut k = 0usize;
    let status = 'outer: loop {
        k += 1;
        l = (l / 2.0).max(L_FLOOR);
        let mut doublings = 0usize;
        let (alpha, a_next, y, g, u_next, q_next, jq) = loop {
            let alpha = alpha_root(l, a_total, mu);
            let a_next = a_total + alpha;
            let y = HVector::lincomb(alpha / a_next, &u, a_total / a_next, &q);
            let (jy, gy) = counted.value_and_gradient(&y);
            let u_next = damped_u(&u, &y, &gy, alpha, a_total, mu);
            let q_next = HVector::lincomb(alpha / a_next, &u_next, a_total / a_next, &q);
            let jq = counted.value(&q_next);
            let diff = &q_next - &y;
            if descent_ok(jy, jq, gy.inner(&diff), diff.norm_sq(), l, two_delta) {
                break (alpha, a_next, y, gy, u_next, q_next, jq);
            }
            if doublings == MAX_DOUBLINGS {
                break 'outer TerminalStatus::LineSearchFailed;
            }
            doublings += 1;
            l *= 2.0;
        };
        u = u_next;
        q = q_next;
        a_total = a_next;
        value = jq;
        let info = IterationInfo {
            k,
            value,
            grad_norm: g.norm(),
            alpha,
            a_k: a_total,
            l_used: l,
            y: &y,
            u: &u,
            q: &q,
            query: Some((&y, alpha)),
        };
        if let Some(status) = rec.record(&mut counted, &info) {
            break status;
        }
    };
    Ok(SolveResult { solution: q, log: rec.into_log(status) })
}
