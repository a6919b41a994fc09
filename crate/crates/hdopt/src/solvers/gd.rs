//! Gradient descent: fixed step `1/L`, backtracking step, or exact line
//! search, reporting either the last iterate or the running average.
//!
//! The trajectory is `y^{k+1} = y^k - alpha_k grad J(y^k)`. With the
//! averaged flag the reported iterate is instead `q^0 = 0`,
//! `q^{k+1} = (k q^k + y^{k+1}) / (k + 1)`, the mean of `y^1..y^k`; both
//! flavors satisfy `J - J* = O(L R^2 / N)` at step `1/L`. The backtracking
//! step certifies constants by the same descent test as the accelerated
//! variant (widened by `2 delta` for declared oracle inexactness, one value
//! query per trial, halve-then-double between iterations). Exact line search
//! brackets a decrease by doubling, then golden-sections the step to a
//! relative width of 1e-8 — on a one-dimensional quadratic that converges in
//! a single iteration.

use super::{
    check_start, require_positive, Hooks, IterationInfo, Recorder,
    SolveResult, StopRule, TerminalStatus,
};
use crate::hilbert::HVector;
use crate::oracle::{Counted, Oracle};

// Redundant when a std build is in the crate graph, required for no_std.
#[allow(unused_imports)]
use num_traits::Float;

/// Step policy for [`gd`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GdStep {
    /// Constant step `1/l` from a trusted gradient Lipschitz constant.
    Fixed(f64),
    /// Backtracking search for the constant, no input required.
    Adaptive,
    /// Exact minimization of `J` along the ray `y - alpha * grad J(y)`.
    ExactLineSearch,
}

const L_FLOOR: f64 = 1e-30;
const MAX_DOUBLINGS: usize = 60;
const LINE_SEARCH_REL_TOL: f64 = 1e-8;

/// Gradient descent; see the module docs for the variants.
pub fn gd<O: Oracle + ?Sized>(
    oracle: &O,
    y0: &HVector,
    step: GdStep,
    averaged: bool,
    stop: &StopRule,
) -> crate::Result<SolveResult> {
    gd_with(oracle, y0, step, averaged, stop, &mut Hooks::default())
}

/// [`gd`] with instrumentation hooks.
pub fn gd_with<O: Oracle + ?Sized>(
    oracle: &O,
    y0: &HVector,
    step: GdStep,
    averaged: bool,
    stop: &StopRule,
    hooks: &mut Hooks<'_, '_>,
) -> crate::Result<SolveResult> {
    check_start(oracle, y0)?;
    if let GdStep::Fixed(l) = step {
        require_positive(l, "l")?;
    }
    let two_delta = 2.0 * oracle.info().delta.max(0.0);
    let mut counted = Counted::new(oracle);
    let mut rec = Recorder::new(stop, hooks)?;

    let mut y = y0.clone();
    let mut jy = counted.value(&y);
    // The first iteration consumes this gradient; later ones query their own.
    let mut g_cache = Some(counted.gradient(&y));
    let g0_norm = g_cache.as_ref().map_or(0.0, HVector::norm);

    let mut avg = averaged.then(|| HVector::zeros(y.len(), y.weight()));
    let value0 = match &avg {
        Some(a) => counted.value(a),
        None => jy,
    };
    let mut a_total = 0.0;
    {
        let iterate: &HVector = avg.as_ref().unwrap_or(&y);
        let info = IterationInfo {
            k: 0,
            value: value0,
            grad_norm: g0_norm,
            alpha: 0.0,
            a_k: a_total,
            l_used: 0.0,
            y: &y,
            u: iterate,
            q: iterate,
            query: None,
        };
        if let Some(status) = rec.record(&mut counted, &info) {
            let solution = avg.unwrap_or(y);
            return Ok(SolveResult { solution, log: rec.into_log(status) });
        }
    }

    let mut l_adaptive: f64 = 1.0;
    let mut k = 0usize;
    let status = loop {
        k += 1;
        let y_prev = y.clone();
        let g = match g_cache.take() {
            Some(g) => g,
            None => counted.gradient(&y_prev),
        };

        let (alpha, j_next) = match step {
            GdStep::Fixed(l) => {
                let alpha = 1.0 / l;
                let mut next = y_prev.clone();
                next.axpy(-alpha, &g);
                let jn = counted.value(&next);
                y = next;
                (alpha, jn)
            }
            GdStep::Adaptive => {
                l_adaptive = (l_adaptive / 2.0).max(L_FLOOR);
                let mut doublings = 0usize;
                let accepted = loop {
                    let alpha = 1.0 / l_adaptive;
                    let mut next = y_prev.clone();
                    next.axpy(-alpha, &g);
                    let jn = counted.value(&next);
                    let diff = &next - &y_prev;
                    let gd_term = g.inner(&diff);
                    let model = jy + gd_term + 0.5 * l_adaptive * diff.norm_sq() + two_delta;
                    let cushion = 4.0 * f64::EPSILON * (jy.abs() + jn.abs() + gd_term.abs());
                    if jn.is_finite() && jn <= model + cushion {
                        break Some((alpha, next, jn));
                    }
                    if doublings == MAX_DOUBLINGS {
                        break None;
                    }
                    doublings += 1;
                    l_adaptive *= 2.0;
                };
                match accepted {
                    Some((alpha, next, jn)) => {
                        y = next;
                        (alpha, jn)
                    }
                    None => break TerminalStatus::LineSearchFailed,
                }
            }
            GdStep::ExactLineSearch => match line_search(&mut counted, &y_prev, &g, jy) {
                Some((alpha, next, jn)) => {
                    y = next;
                    (alpha, jn)
                }
                None => break TerminalStatus::LineSearchFailed,
            },
        };
        jy = j_next;
        a_total += alpha;

        let value = match avg.as_mut() {
            Some(a) => {
                // q^k = ((k-1) q^{k-1} + y^k) / k
                let kf = k as f64;
                *a = HVector::lincomb((kf - 1.0) / kf, a, 1.0 / kf, &y);
                counted.value(a)
            }
            None => jy,
        };
        let iterate: &HVector = avg.as_ref().unwrap_or(&y);
        let l_used = match step {
            GdStep::Fixed(l) => l,
            GdStep::Adaptive => l_adaptive,
            GdStep::ExactLineSearch => 1.0 / alpha,
        };
        let info = IterationInfo {
            k,
            value,
            grad_norm: g.norm(),
            alpha,
            a_k: a_total,
            l_used,
            y: &y,
            u: iterate,
            q: iterate,
            query: Some((&y_prev, alpha)),
        };
        if let Some(status) = rec.record(&mut counted, &info) {
            break status;
        }
    };
    let solution = avg.unwrap_or(y);
    Ok(SolveResult { solution, log: rec.into_log(status) })
}

/// Exact line search along `-g` from `y`: doubling bracket, then golden
/// section to relative width [`LINE_SEARCH_REL_TOL`]. Returns the step, the
/// new point, and its value, or `None` when no decrease can be bracketed.
fn line_search<O: Oracle + ?Sized>(
    counted: &mut Counted<'_, O>,
    y: &HVector,
    g: &HVector,
    jy: f64,
) -> Option<(f64, HVector, f64)> {
    let probe = |alpha: f64, counted: &mut Counted<'_, O>| {
        let mut p = y.clone();
        p.axpy(-alpha, g);
        counted.value(&p)
    };

    // Find b with phi(b) < phi(0), shrinking if the unit step overshoots.
    let mut b = 1.0;
    let mut phi_b = probe(b, counted);
    while !(phi_b < jy) {
        b /= 2.0;
        if b < 1e-300 {
            return None;
        }
        phi_b = probe(b, counted);
    }
    // Expand while still descending; the minimizer then lies in [0, hi].
    let mut hi = 2.0 * b;
    let mut phi_hi = probe(hi, counted);
    let mut expands = 0usize;
    while phi_hi.is_finite() && phi_hi < phi_b {
        expands += 1;
        if expands > MAX_DOUBLINGS {
            return None;
        }
        phi_b = phi_hi;
        hi *= 2.0;
        phi_hi = probe(hi, counted);
    }

    // Golden section on [0, hi].
    let ratio = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut lo = 0.0f64;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = probe(x1, counted);
    let mut f2 = probe(x2, counted);
    while hi - lo > LINE_SEARCH_REL_TOL * hi {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = probe(x1, counted);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = probe(x2, counted);
        }
    }
    let alpha = 0.5 * (lo + hi);
    let mut next = y.clone();
    next.axpy(-alpha, g);
    let jn = counted.value(&next);
    Some((alpha, next, jn))
}
