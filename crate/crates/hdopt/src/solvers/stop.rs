//! Stop rules, evaluated at the returned iterate after every outer iteration
//! (and once at the initial point).

use alloc::vec::Vec;

use super::log::TerminalStatus;
use crate::Error;

/// When to stop a run. Accuracy-based rules terminate with
/// [`TerminalStatus::Converged`], budget rules with
/// [`TerminalStatus::BudgetExhausted`]; when several fire at once the
/// accuracy outcome wins.
#[derive(Debug, Clone, PartialEq)]
pub enum StopRule {
    /// Observable objective at the iterate drops to or below the threshold.
    ObjectiveBelow(f64),
    /// Gradient norm at the iterate drops to or below the threshold. Forces
    /// one extra gradient evaluation per iteration on methods that do not
    /// already query the gradient there.
    GradNormBelow(f64),
    /// At most this many outer iterations.
    MaxIter(usize),
    /// Constrained runs only: duality-gap estimate at most `eps` and
    /// feasibility residual at most `eps_tilde`. Plain primal solvers reject
    /// this rule; the constrained drivers evaluate it themselves.
    GapAndFeasibility { eps: f64, eps_tilde: f64 },
    /// Fires as soon as any member fires.
    Any(Vec<StopRule>),
}

/// Quantities a solver exposes to the stop rule each iteration.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StopMeasures {
    pub k: usize,
    pub value: f64,
    pub grad_norm_at_q: Option<f64>,
    pub gap: Option<f64>,
    pub feasibility: Option<f64>,
}

impl StopRule {
    /// Whether the rule needs the gradient norm at the iterate itself.
    pub fn needs_grad_at_q(&self) -> bool {
        match self {
            StopRule::GradNormBelow(_) => true,
            StopRule::Any(rules) => rules.iter().any(StopRule::needs_grad_at_q),
            _ => false,
        }
    }

    /// Whether the rule involves a duality-gap test.
    pub fn needs_gap(&self) -> bool {
        match self {
            StopRule::GapAndFeasibility { .. } => true,
            StopRule::Any(rules) => rules.iter().any(StopRule::needs_gap),
            _ => false,
        }
    }

    /// Tightest iteration budget contained in the rule, if any.
    pub fn max_iter(&self) -> Option<usize> {
        match self {
            StopRule::MaxIter(n) => Some(*n),
            StopRule::Any(rules) => rules.iter().filter_map(StopRule::max_iter).min(),
            _ => None,
        }
    }

    /// Validates the rule for a plain primal solver.
    pub(crate) fn validate_primal(&self) -> crate::Result<()> {
        if self.needs_gap() {
            return Err(Error::bad_param(
                "stop",
                "gap/feasibility stopping is only available through the constrained drivers",
            ));
        }
        Ok(())
    }

    pub(crate) fn check(&self, m: &StopMeasures) -> Option<TerminalStatus> {
        match self {
            StopRule::ObjectiveBelow(eps) => (m.value <= *eps).then_some(TerminalStatus::Converged),
            StopRule::GradNormBelow(eps) => m
                .grad_norm_at_q
                .and_then(|g| (g <= *eps).then_some(TerminalStatus::Converged)),
            StopRule::MaxIter(n) => (m.k >= *n).then_some(TerminalStatus::BudgetExhausted),
            StopRule::GapAndFeasibility { eps, eps_tilde } => match (m.gap, m.feasibility) {
                (Some(gap), Some(feas)) => (gap.abs() <= *eps && feas <= *eps_tilde)
                    .then_some(TerminalStatus::Converged),
                _ => None,
            },
            StopRule::Any(rules) => {
                let mut hit = None;
                for rule in rules {
                    match rule.check(m) {
                        Some(TerminalStatus::Converged) => return Some(TerminalStatus::Converged),
                        Some(other) => hit = hit.or(Some(other)),
                        None => {}
                    }
                }
                hit
            }
        }
    }
}
