//! First-order methods for `min J(q)` over a weighted-grid space.
//!
//! Everything here drives a [`crate::oracle::Oracle`] and produces a
//! [`SolveResult`]: the final iterate plus a [`RunLog`] with one row per
//! outer iteration (the initial point is row 0). The workhorses are the
//! accelerated triangle scheme ([`stm`]) with guarantee
//! `J(q^N) - J* <= 4 L R^2 / N^2`, its backtracking variant [`astm`]
//! (`8 L R^2 / N^2`, no Lipschitz constant required), and the gradient
//! family [`gd`] (`2 L R^2 / N` with averaging). On top sit the drivers in
//! [`meta`]: value-halving restarts, strongly convex restarts, doubling
//! calibration of an unknown Lipschitz constant, and an accuracy-driven
//! discretization budget.
//!
//! Runs are deterministic: no randomness, and timestamps come from an
//! injectable [`Clock`] that defaults to zero.

mod gd;
mod log;
mod meta;
mod stm;
mod stop;

pub use gd::{gd, gd_with, GdStep};
pub use log::{AttemptRecord, Clock, LogRow, NullClock, RunLog, TerminalStatus};
pub use meta::{
    accuracy_budget, l_doubling, restart_half, rstm, BudgetMethod, DiscretizationFamily,
    RestartCertificate, RstmSegment,
};
pub use stm::{astm, astm_with, stm, stm_with};
pub use stop::StopRule;

use crate::hilbert::HVector;
use crate::oracle::{Counted, Oracle};
use crate::Error;

use stop::StopMeasures;

/// Final iterate of a run together with its per-iteration record.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub solution: HVector,
    pub log: RunLog,
}

impl SolveResult {
    pub fn status(&self) -> TerminalStatus {
        self.log.status()
    }
}

/// Snapshot handed to an [`Observer`] after each outer iteration.
///
/// `value` is the observable objective at `q` (already computed for the log,
/// so observers never need to re-query it). `query` names the point whose
/// gradient drove this iteration together with its step weight — constrained
/// drivers rebuild weighted primal averages from exactly these pairs.
#[derive(Debug)]
pub struct IterationInfo<'a> {
    pub k: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub alpha: f64,
    pub a_k: f64,
    pub l_used: f64,
    pub y: &'a HVector,
    pub u: &'a HVector,
    pub q: &'a HVector,
    pub query: Option<(&'a HVector, f64)>,
}

/// What an observer reports back: an early-stop request (terminates the run
/// as [`TerminalStatus::Converged`]) and, optionally, a feasibility residual
/// to store in the current log row.
#[derive(Debug, Default, Clone, Copy)]
pub struct Observed {
    pub stop: bool,
    pub feasibility: Option<f64>,
}

impl Observed {
    pub fn proceed() -> Self {
        Observed::default()
    }
}

/// Per-iteration callback; see [`IterationInfo`].
pub type Observer<'o> = dyn FnMut(&IterationInfo<'_>) -> Observed + 'o;

/// Optional instrumentation injected into a run.
#[derive(Default)]
pub struct Hooks<'a, 'o> {
    pub clock: Option<&'a dyn Clock>,
    pub observer: Option<&'a mut Observer<'o>>,
}

impl<'a, 'o> Hooks<'a, 'o> {
    pub fn with_observer(observer: &'a mut Observer<'o>) -> Self {
        Hooks { clock: None, observer: Some(observer) }
    }
}

/// A primal method together with its parameters, for dispatch by drivers
/// and the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodSpec {
    /// Accelerated triangle scheme at a trusted Lipschitz constant.
    Stm { l: f64, mu: f64 },
    /// Backtracking accelerated scheme; no constant required.
    Astm { mu: f64 },
    /// Gradient descent; `averaged` returns the running mean of the
    /// trajectory started at zero instead of the last iterate.
    Gd { step: GdStep, averaged: bool },
}

/// Runs the method a [`MethodSpec`] describes.
pub fn run_method<O: Oracle + ?Sized>(
    spec: &MethodSpec,
    oracle: &O,
    y0: &HVector,
    stop: &StopRule,
) -> crate::Result<SolveResult> {
    run_method_with(spec, oracle, y0, stop, &mut Hooks::default())
}

/// [`run_method`] with instrumentation hooks.
pub fn run_method_with<O: Oracle + ?Sized>(
    spec: &MethodSpec,
    oracle: &O,
    y0: &HVector,
    stop: &StopRule,
    hooks: &mut Hooks<'_, '_>,
) -> crate::Result<SolveResult> {
    match *spec {
        MethodSpec::Stm { l, mu } => stm_with(oracle, y0, l, mu, stop, hooks),
        MethodSpec::Astm { mu } => astm_with(oracle, y0, mu, stop, hooks),
        MethodSpec::Gd { step, averaged } => gd_with(oracle, y0, step, averaged, stop, hooks),
    }
}

/// Checks that a start point lives in the oracle's space.
fn check_start<O: Oracle + ?Sized>(oracle: &O, y0: &HVector) -> crate::Result<()> {
    let space = oracle.space();
    if y0.len() != space.len {
        return Err(Error::DimensionMismatch {
            expected: space.len,
            got: y0.len(),
            what: "start point",
        });
    }
    if y0.weight() != space.weight {
        return Err(Error::bad_param("start", "start point weight differs from oracle space"));
    }
    if !y0.is_finite() {
        return Err(Error::bad_param("start", "start point has non-finite entries"));
    }
    Ok(())
}

pub(crate) fn require_positive(value: f64, field: &'static str) -> crate::Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::bad_param(field, "must be finite and positive"));
    }
    Ok(())
}

pub(crate) fn require_nonnegative(value: f64, field: &'static str) -> crate::Result<()> {
    if !(value.is_finite() && value >= 0.0) {
        return Err(Error::bad_param(field, "must be finite and non-negative"));
    }
    Ok(())
}

/// Shared per-iteration bookkeeping: logs a row, runs the observer, applies
/// finiteness guards and the stop rule. Returns the terminal status as soon
/// as the run should end.
struct Recorder<'h, 'a, 'o> {
    log: RunLog,
    stop: &'h StopRule,
    hooks: &'h mut Hooks<'a, 'o>,
}

impl<'h, 'a, 'o> Recorder<'h, 'a, 'o> {
    fn new(stop: &'h StopRule, hooks: &'h mut Hooks<'a, 'o>) -> crate::Result<Self> {
        stop.validate_primal()?;
        Ok(Recorder { log: RunLog::new(), stop, hooks })
    }

    fn record<O: Oracle + ?Sized>(
        &mut self,
        counted: &mut Counted<'_, O>,
        info: &IterationInfo<'_>,
    ) -> Option<TerminalStatus> {
        // A gradient-based rule is measured at the iterate itself, which may
        // differ from the method's last query point; that costs one extra
        // gradient evaluation per iteration.
        let grad_at_q = self.stop.needs_grad_at_q().then(|| counted.gradient(info.q).norm());
        let observed = match self.hooks.observer.as_mut() {
            Some(observer) => observer(info),
            None => Observed::proceed(),
        };
        self.log.push(LogRow {
            k: info.k,
            value: info.value,
            grad_norm: grad_at_q.unwrap_or(info.grad_norm),
            a_k: info.a_k,
            l_used: info.l_used,
            func_evals: counted.func_evals,
            grad_evals: counted.grad_evals,
            feasibility: observed.feasibility,
            elapsed_ms: self.hooks.clock.map_or(0.0, Clock::elapsed_ms),
        });
        if !(info.value.is_finite() && info.q.is_finite() && info.u.is_finite()) {
            return Some(TerminalStatus::NonFinite);
        }
        if observed.stop {
            return Some(TerminalStatus::Converged);
        }
        self.stop.check(&StopMeasures {
            k: info.k,
            value: info.value,
            grad_norm_at_q: grad_at_q,
            gap: None,
            feasibility: observed.feasibility,
        })
    }

    fn into_log(mut self, status: TerminalStatus) -> RunLog {
        self.log.set_status(status);
        self.log
    }
}
