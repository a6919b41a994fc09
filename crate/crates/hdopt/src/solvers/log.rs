//! Per-iteration run records shared by every solver.

use alloc::vec::Vec;

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalStatus {
    /// An accuracy-based stop rule (or an external certificate) fired.
    Converged,
    /// Only an iteration/work budget fired.
    BudgetExhausted,
    /// A backtracking loop exceeded its doubling cap, or a line search could
    /// not bracket a decrease.
    LineSearchFailed,
    /// The oracle returned a non-finite value or gradient (typically a step
    /// size far above stability on a quadratic).
    NonFinite,
}

/// Snapshot after one outer iteration (row `k = 0` is the initialized state).
///
/// `value` and `grad_norm` are *observable* quantities: whatever the oracle
/// reports (so for inexact oracles they include the noise), with `grad_norm`
/// taken at the most recent gradient query unless a gradient-based stop rule
/// forces an evaluation at the iterate itself. Eval counters are cumulative
/// over the run. `feasibility` is filled by constrained drivers and empty for
/// plain primal runs.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub k: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub a_k: f64,
    pub l_used: f64,
    pub func_evals: u64,
    pub grad_evals: u64,
    pub feasibility: Option<f64>,
    pub elapsed_ms: f64,
}

/// One attempt of the accuracy-driven discretization budget driver.
#[derive(Debug, Clone, PartialEq)]
pub struct AttemptRecord {
    /// Discretization constant in effect (`tau = c * delta_target^(1/p)`).
    pub c: f64,
    /// Discretization step chosen for the attempt.
    pub tau: f64,
    /// Iteration budget granted to the inner method.
    pub budget: usize,
    /// Observable objective value reached at the end of the attempt.
    pub achieved: f64,
    /// Arithmetic-work proxy `budget * tau^(-r)`.
    pub work: f64,
    pub success: bool,
}

/// Complete record of a run: one row per outer iteration plus the initial
/// point, a terminal status, and (for budgeted drivers) per-attempt metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    rows: Vec<LogRow>,
    status: TerminalStatus,
    pub attempts: Vec<AttemptRecord>,
}

impl RunLog {
    pub fn new() -> Self {
        RunLog { rows: Vec::new(), status: TerminalStatus::BudgetExhausted, attempts: Vec::new() }
    }

    pub fn push(&mut self, row: LogRow) {
        self.rows.push(row);
    }

    pub fn set_status(&mut self, status: TerminalStatus) {
        self.status = status;
    }

    pub fn status(&self) -> TerminalStatus {
        self.status
    }

    pub fn rows(&self) -> &[LogRow] {
        &self.rows
    }

    /// Iterations performed (rows minus the initial point).
    pub fn iterations(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn final_row(&self) -> Option<&LogRow> {
        self.rows.last()
    }

    pub fn final_value(&self) -> f64 {
        self.final_row().map_or(f64::NAN, |r| r.value)
    }

    /// Appends a follow-up run, renumbering iterations and accumulating eval
    /// counters so the merged log still reads as one run. The follow-up's
    /// initial row is dropped (it re-describes the current state).
    /// `extra_func`/`extra_grad` account for evaluations the driver itself
    /// performed between the two runs (restart certificates and the like).
    pub fn append_continued(&mut self, other: RunLog, extra_func: u64, extra_grad: u64) {
        let (k0, f0, g0) = match self.rows.last() {
            Some(last) => (last.k, last.func_evals + extra_func, last.grad_evals + extra_grad),
            None => (0, extra_func, extra_grad),
        };
        let skip = usize::from(!self.rows.is_empty());
        for row in other.rows.into_iter().skip(skip) {
            self.rows.push(LogRow {
                k: k0 + row.k,
                func_evals: f0 + row.func_evals,
                grad_evals: g0 + row.grad_evals,
                ..row
            });
        }
        self.status = other.status;
        self.attempts.extend(other.attempts);
    }
}

impl Default for RunLog {
    fn default() -> Self {
        RunLog::new()
    }
}

/// Source of per-iteration timestamps for [`LogRow::elapsed_ms`].
///
/// The default [`NullClock`] reports 0 so that logs are bit-reproducible;
/// hosts that want real per-row timings can inject a wall clock through the
/// run hooks.
pub trait Clock {
    fn elapsed_ms(&self) -> f64;
}

/// Deterministic clock: always 0 ms.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullClock;

impl Clock for NullClock {
    fn elapsed_ms(&self) -> f64 {
        0.0
    }
}
