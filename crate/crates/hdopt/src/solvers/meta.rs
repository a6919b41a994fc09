//! Drivers that wrap the core methods: value-halving restarts, strongly
//! convex restarts with a verifiable certificate, doubling calibration of an
//! unknown step constant, and an accuracy-driven discretization budget.

use super::log::{AttemptRecord, LogRow, RunLog, TerminalStatus};
use super::{
    astm_with, gd_with, run_method_with, stm_with, GdStep, Hooks, IterationInfo, MethodSpec,
    Observed, SolveResult, StopRule,
};
use crate::hilbert::HVector;
use crate::oracle::Oracle;

// Redundant when a std build is in the crate graph, required for no_std.
#[allow(unused_imports)]
use num_traits::Float;
use crate::Error;

/// Restarts `method` from the current point every time the objective halves;
/// stops once it reaches `eps`. Requires an oracle that declares a zero
/// optimal value (the scheme halves absolute values, not gaps). Each segment
/// may spend at most `segment_max_iter` iterations; a segment that exhausts
/// that budget without halving ends the run as budget-exhausted.
///
/// For a strongly convex objective driven by the accelerated method this
/// costs `O(sqrt(L/mu) log2(J(y0)/eps))` gradient calls in total.
pub fn restart_half<O: Oracle + ?Sized>(
    method: &MethodSpec,
    oracle: &O,
    y0: &HVector,
    eps: f64,
    segment_max_iter: usize,
) -> crate::Result<SolveResult> {
    restart_half_with(method, oracle, y0, eps, segment_max_iter, &mut Hooks::default())
}

/// [`restart_half`] with instrumentation hooks (observers see segment-local
/// iteration indices).
pub fn restart_half_with<O: Oracle + ?Sized>(
    method: &MethodSpec,
    oracle: &O,
    y0: &HVector,
    eps: f64,
    segment_max_iter: usize,
    hooks: &mut Hooks<'_, '_>,
) -> crate::Result<SolveResult> {
    super::require_positive(eps, "eps")?;
    if segment_max_iter == 0 {
        return Err(Error::bad_param("segment_max_iter", "must be at least 1"));
    }
    match oracle.info().j_star {
        Some(j) if j == 0.0 => {}
        _ => {
            return Err(Error::MissingKnowledge {
                what: "a declared zero optimal value (restart_half halves absolute values)",
            })
        }
    }

    let j0 = oracle.value(y0);
    let g0 = oracle.gradient(y0);
    if j0 <= eps {
        let mut log = RunLog::new();
        log.push(LogRow {
            k: 0,
            value: j0,
            grad_norm: g0.norm(),
            a_k: 0.0,
            l_used: 0.0,
            func_evals: 1,
            grad_evals: 1,
            feasibility: None,
            elapsed_ms: hooks.clock.map_or(0.0, |c| c.elapsed_ms()),
        });
        log.set_status(TerminalStatus::Converged);
        return Ok(SolveResult { solution: y0.clone(), log });
    }

    let mut merged = RunLog::new();
    let mut extra_func = 1u64; // the initial value probe above
    let mut extra_grad = 1u64;
    let mut current = y0.clone();
    let mut j_current = j0;
    // Each successful segment at least halves the value, so this cap is only
    // a guard against stagnating arithmetic.
    let max_segments = ((j0 / eps).log2().ceil().max(1.0) as usize).saturating_add(8);
    let mut status = TerminalStatus::BudgetExhausted;
    for _ in 0..max_segments {
        let target = 0.5 * j_current;
        let stop = StopRule::Any(alloc::vec![
            StopRule::ObjectiveBelow(target),
            StopRule::MaxIter(segment_max_iter),
        ]);
        let mut segment_hooks = Hooks { clock: hooks.clock, observer: hooks.observer.take() };
        let res = run_method_with(method, oracle, &current, &stop, &mut segment_hooks);
        hooks.observer = segment_hooks.observer.take();
        let res = res?;
        let seg_status = res.status();
        current = res.solution;
        j_current = res.log.final_value();
        merged.append_continued(res.log, extra_func, extra_grad);
        extra_func = 0;
        extra_grad = 0;
        if seg_status != TerminalStatus::Converged {
            status = seg_status;
            break;
        }
        if j_current <= eps {
            status = TerminalStatus::Converged;
            break;
        }
    }
    merged.set_status(status);
    Ok(SolveResult { solution: current, log: merged })
}

/// Segment policy for [`rstm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RstmSegment {
    /// Non-adaptive segments of `ceil(2 sqrt(l / mu0))` accelerated
    /// iterations at trusted constant `l`.
    FixedLength(f64),
    /// Backtracking segments that end once the cumulative weight satisfies
    /// `A_N >= 4 / mu0`.
    Adaptive,
}

/// How [`rstm`] certifies convergence between segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RestartCertificate {
    /// `J - J* <= ||grad J||^2 / (2 mu) <= eps` with a declared lower bound
    /// `mu` on the strong-convexity constant.
    GradBased { mu: f64 },
    /// `J - j_star <= eps` with a declared optimal value.
    ValueBased { j_star: f64 },
}

const RSTM_ADAPTIVE_SEGMENT_CAP: usize = 1_000_000;

/// Restarted accelerated scheme for strongly convex objectives.
///
/// Runs accelerated segments sized by the modulus guess `mu0`, restarting
/// from the average `(q + u) / 2` of the segment's two final sequences, and
/// stops on a verifiable certificate: gradient-based when the oracle
/// declares a strong-convexity lower bound, value-based when it declares the
/// optimal value, otherwise the run cannot certify anything and the call is
/// rejected. Overestimating `mu0` by a factor `c` inflates the number of
/// segments by about `sqrt(c)` without endangering convergence.
pub fn rstm<O: Oracle + ?Sized>(
    oracle: &O,
    y0: &HVector,
    segment: RstmSegment,
    mu0: f64,
    eps: f64,
    max_segments: usize,
) -> crate::Result<SolveResult> {
    rstm_with(oracle, y0, segment, mu0, eps, max_segments, &mut Hooks::default())
}

/// [`rstm`] with instrumentation hooks (the observer slot is used internally;
/// only the clock is forwarded).
pub fn rstm_with<O: Oracle + ?Sized>(
    oracle: &O,
    y0: &HVector,
    segment: RstmSegment,
    mu0: f64,
    eps: f64,
    max_segments: usize,
    hooks: &mut Hooks<'_, '_>,
) -> crate::Result<SolveResult> {
    super::require_positive(mu0, "mu0")?;
    super::require_positive(eps, "eps")?;
    if let RstmSegment::FixedLength(l) = segment {
        super::require_positive(l, "l")?;
    }
    let info = oracle.info();
    let certificate = match (info.mu_hint, info.j_star) {
        (Some(mu), _) if mu > 0.0 => RestartCertificate::GradBased { mu },
        (_, Some(j_star)) => RestartCertificate::ValueBased { j_star },
        _ => {
            return Err(Error::MissingKnowledge {
                what: "a strong-convexity lower bound or optimal value for restart certificates",
            })
        }
    };

    let mut merged = RunLog::new();
    let mut extra_func = 0u64;
    let mut extra_grad = 0u64;
    let mut current = y0.clone();
    let mut status = TerminalStatus::BudgetExhausted;
    for _ in 0..max_segments {
        let mut last_u: Option<HVector> = None;
        let mut observer = |it: &IterationInfo<'_>| {
            last_u = Some(it.u.clone());
            let long_enough = matches!(segment, RstmSegment::Adaptive) && it.a_k >= 4.0 / mu0;
            Observed { stop: long_enough, feasibility: None }
        };
        let mut seg_hooks = Hooks { clock: hooks.clock, observer: Some(&mut observer) };
        let res = match segment {
            RstmSegment::FixedLength(l) => {
                let n = (2.0 * (l / mu0).sqrt()).ceil().max(1.0) as usize;
                stm_with(oracle, &current, l, 0.0, &StopRule::MaxIter(n), &mut seg_hooks)?
            }
            RstmSegment::Adaptive => astm_with(
                oracle,
                &current,
                0.0,
                &StopRule::MaxIter(RSTM_ADAPTIVE_SEGMENT_CAP),
                &mut seg_hooks,
            )?,
        };
        let seg_status = res.status();
        let q = res.solution;
        merged.append_continued(res.log, extra_func, extra_grad);
        extra_func = 0;
        extra_grad = 0;
        if matches!(seg_status, TerminalStatus::NonFinite | TerminalStatus::LineSearchFailed) {
            current = q;
            status = seg_status;
            break;
        }
        let u = match last_u {
            Some(u) => u,
            None => {
                current = q;
                status = seg_status;
                break;
            }
        };
        current = HVector::lincomb(0.5, &q, 0.5, &u);

        let certified = match certificate {
            RestartCertificate::GradBased { mu } => {
                extra_grad += 1;
                oracle.gradient(&current).norm_sq() / (2.0 * mu) <= eps
            }
            RestartCertificate::ValueBased { j_star } => {
                extra_func += 1;
                oracle.value(&current) - j_star <= eps
            }
        };
        if certified {
            status = TerminalStatus::Converged;
            break;
        }
    }
    merged.set_status(status);
    Ok(SolveResult { solution: current, log: merged })
}

/// Calibrates an unknown step constant by re-running the non-adaptive
/// accelerated scheme from the same start at `l = 1, 2, 4, ...` until two
/// consecutive runs' final objective values agree to `stabilization_tol`
/// relative (divergent, non-finite runs never agree). Values that are both
/// tiny compared to `J(y0)` count as agreeing regardless of their ratio.
/// Total work exceeds the final run's by at most a small constant factor.
pub fn l_doubling<O: Oracle + ?Sized>(
    oracle: &O,
    y0: &HVector,
    stop: &StopRule,
    stabilization_tol: f64,
) -> crate::Result<SolveResult> {
    l_doubling_with(oracle, y0, stop, stabilization_tol, &mut Hooks::default())
}

/// [`l_doubling`] with instrumentation hooks.
pub fn l_doubling_with<O: Oracle + ?Sized>(
    oracle: &O,
    y0: &HVector,
    stop: &StopRule,
    stabilization_tol: f64,
    hooks: &mut Hooks<'_, '_>,
) -> crate::Result<SolveResult> {
    if !(stabilization_tol >= 0.0) {
        return Err(Error::bad_param("stabilization_tol", "must be non-negative"));
    }
    let j0 = oracle.value(y0);
    let tiny_floor = 1e-13 * (1.0 + j0.abs());

    let mut merged = RunLog::new();
    let mut extra_func = 1u64; // the scale probe above
    let mut l = 1.0;
    let mut previous: Option<f64> = None;
    let mut current = y0.clone();
    let mut status = TerminalStatus::BudgetExhausted;
    // l = 2^60 is the documented give-up point.
    for _ in 0..=60 {
        let mut run_hooks = Hooks { clock: hooks.clock, observer: hooks.observer.take() };
        let res = stm_with(oracle, y0, l, 0.0, stop, &mut run_hooks);
        hooks.observer = run_hooks.observer.take();
        let res = res?;
        let run_status = res.status();
        let value = res.log.final_value();
        current = res.solution;
        merged.append_continued(res.log, extra_func, 0);
        extra_func = 0;
        if run_status == TerminalStatus::Converged {
            // The inner stop rule's own accuracy target fired; no need to
            // keep calibrating.
            status = TerminalStatus::Converged;
            break;
        }
        if let Some(prev) = previous {
            let agree = prev.is_finite() && value.is_finite() && {
                let diff = (prev - value).abs();
                let scale = prev.abs().max(value.abs());
                diff == 0.0 || diff <= stabilization_tol * scale || scale <= tiny_floor
            };
            if agree {
                status = TerminalStatus::Converged;
                break;
            }
        }
        previous = Some(value);
        l *= 2.0;
    }
    merged.set_status(status);
    Ok(SolveResult { solution: current, log: merged })
}

/// A problem that can be discretized at any resolution `tau`, producing an
/// oracle whose declared inexactness reflects the discretization error.
pub trait DiscretizationFamily {
    type Oracle: Oracle;
    fn build(&self, tau: f64) -> crate::Result<Self::Oracle>;
    /// Start point for a given discretization; defaults to the origin.
    fn start_point(&self, oracle: &Self::Oracle) -> HVector {
        oracle.space().zeros()
    }
}

/// Inner method for [`accuracy_budget`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetMethod {
    /// Averaged gradient descent at the family's declared constant; budget
    /// `N = 4 min{L R^2 / eps, (L/mu) ln(L R^2 / eps)}`.
    GdAveraged,
    /// Backtracking accelerated scheme; budget
    /// `N = 4 min{sqrt(L R^2 / eps), sqrt(L/mu) ln(L R^2 / eps)}`.
    Astm,
}

const BUDGET_C_MIN: f64 = 1e-9;

/// Chooses a discretization fine enough for a target accuracy, runs the
/// method for the matching iteration budget, and verifies the result.
///
/// The tolerable oracle error is `delta = eps` for the gradient family and
/// `delta = eps sqrt(max(mu_hat R_hat^2, eps))` for the accelerated family;
/// the step is set to `tau = C delta^(1/p)` where `p` is the declared
/// discretization order and the constant `C` starts at 1. When the final
/// observable value (less any declared optimal value) misses `eps`, `C` is
/// divided by 3 and the attempt repeats; `C` below 1e-9 means `p` or `r` was
/// mis-declared and the run ends budget-exhausted. Every attempt is recorded
/// in the log with its constant, step, budget, achieved value, and the work
/// proxy `N tau^(-r)`.
pub fn accuracy_budget<F: DiscretizationFamily>(
    family: &F,
    method: BudgetMethod,
    eps: f64,
    p: f64,
    r: f64,
    r_hat: f64,
    mu_hat: f64,
) -> crate::Result<SolveResult> {
    super::require_positive(eps, "eps")?;
    super::require_positive(r_hat, "r_hat")?;
    super::require_nonnegative(mu_hat, "mu_hat")?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::bad_param("p", "discretization order must be at least 1"));
    }
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::bad_param("r", "work exponent must be at least 1"));
    }

    let delta_target = match method {
        BudgetMethod::GdAveraged => eps,
        BudgetMethod::Astm => eps * (mu_hat * r_hat * r_hat).max(eps).sqrt(),
    };

    let mut merged = RunLog::new();
    let mut solution: Option<HVector> = None;
    let mut c = 1.0f64;
    let mut status = TerminalStatus::BudgetExhausted;
    while c >= BUDGET_C_MIN {
        let tau = c * delta_target.powf(1.0 / p);
        let oracle = family.build(tau)?;
        let info = oracle.info();
        let l = info.l_hint.ok_or(Error::MissingKnowledge {
            what: "a step-constant hint from the discretization family",
        })?;
        let lr2 = l * r_hat * r_hat;
        let log_term = (lr2 / eps).ln().max(1.0);
        let budget = match method {
            BudgetMethod::GdAveraged => {
                let basic = lr2 / eps;
                let strong = if mu_hat > 0.0 { (l / mu_hat) * log_term } else { f64::INFINITY };
                4.0 * basic.min(strong)
            }
            BudgetMethod::Astm => {
                let basic = (lr2 / eps).sqrt();
                let strong =
                    if mu_hat > 0.0 { (l / mu_hat).sqrt() * log_term } else { f64::INFINITY };
                4.0 * basic.min(strong)
            }
        };
        let budget = budget.ceil().max(1.0) as usize;

        let y0 = family.start_point(&oracle);
        let stop = StopRule::MaxIter(budget);
        let res = match method {
            BudgetMethod::GdAveraged => gd_with(
                &oracle,
                &y0,
                GdStep::Fixed(l),
                true,
                &stop,
                &mut Hooks::default(),
            )?,
            BudgetMethod::Astm => astm_with(&oracle, &y0, mu_hat, &stop, &mut Hooks::default())?,
        };
        let achieved = res.log.final_value();
        let excess = achieved - info.j_star.unwrap_or(0.0);
        let success = excess.is_finite() && excess <= eps;
        let mut attempt_log = res.log;
        attempt_log.attempts.push(AttemptRecord {
            c,
            tau,
            budget,
            achieved,
            work: budget as f64 * tau.powf(-r),
            success,
        });
        merged.append_continued(attempt_log, 0, 0);
        solution = Some(res.solution);
        if success {
            status = TerminalStatus::Converged;
            break;
        }
        c /= 3.0;
    }
    merged.set_status(status);
    let solution = solution.ok_or(Error::bad_param("eps", "no attempt could be made"))?;
    Ok(SolveResult { solution, log: merged })
}
