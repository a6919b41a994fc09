//! Builds the configured problem and method, executes the solve, and
//! packages the iteration log, the solution, and a stdout summary.
//!
//! Iteration logs always use the solver library's deterministic null clock,
//! so a configuration plus its seed fixes every CSV byte; the measured wall
//! time appears only in the JSON summary. The seed feeds exactly two
//! randomized ingredients — oracle perturbation streams (`delta`/`diameter`)
//! and synthetic trace noise (`noise`) — every other part of a run is
//! deterministic to begin with.

use std::time::Instant;

use serde::Serialize;

use hdopt::control::{
    control_oracle, damped_lq_benchmark, damped_lq_discrete_optimum, lq_benchmark, ControlGrid,
    ControlProblem,
};
use hdopt::dual::{min_norm_dual, solve_dual, solve_dual_regularized, DualMethod};
use hdopt::hilbert::{DiagonalOperator, HVector, MatrixOperator};
use hdopt::oracle::{perturb, LeastSquares, Oracle};
use hdopt::pde::{inverse_solve, make_operator, solve_forward, Grid, InverseApproach, InverseMethod};
use hdopt::solvers::{
    rstm, run_method, GdStep, MethodSpec, RstmSegment, RunLog, StopRule, TerminalStatus,
};

use crate::config::{
    ApproachConfig, CliError, MethodConfig, ModeConfig, OperatorConfig, ProblemConfig, RunConfig,
};
use crate::csvio;

/// Salt separating the data-noise stream from the oracle-perturbation
/// stream when both derive from one seed.
const NOISE_SALT: u64 = 0x0DA7_A501;

/// Which solution CSV schema fits the recovered vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionFormat {
    /// Wall data on interior nodes: `y,value` rows.
    Boundary,
    /// Scalar control samples at left endpoints: `t,u` rows.
    Control,
    /// Plain coefficient vector; no solution file schema.
    Plain,
}

/// Everything a finished run hands back to the command line.
#[derive(Debug)]
pub struct RunOutcome {
    pub label: String,
    pub log: RunLog,
    pub solution: HVector,
    pub format: SolutionFormat,
    pub wall_ms: f64,
}

/// The single-line JSON record printed to standard output after a run.
#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub status: &'static str,
    pub final_j: f64,
    pub final_grad_norm: f64,
    pub iterations: usize,
    pub func_evals: u64,
    pub grad_evals: u64,
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

pub fn status_name(status: TerminalStatus) -> &'static str {
    match status {
        TerminalStatus::Converged => "converged",
        TerminalStatus::BudgetExhausted => "budget_exhausted",
        TerminalStatus::LineSearchFailed => "line_search_failed",
        TerminalStatus::NonFinite => "non_finite",
    }
}

impl RunOutcome {
    pub fn summary(&self, output_path: Option<&str>) -> RunSummary {
        let last = self.log.final_row();
        RunSummary {
            status: status_name(self.log.status()),
            final_j: self.log.final_value(),
            final_grad_norm: last.map_or(f64::NAN, |r| r.grad_norm),
            iterations: self.log.iterations(),
            func_evals: last.map_or(0, |r| r.func_evals),
            grad_evals: last.map_or(0, |r| r.grad_evals),
            wall_ms: self.wall_ms,
            output_path: output_path.map(str::to_owned),
        }
    }
}

/// Executes one validated configuration.
pub fn execute(config: &RunConfig) -> Result<RunOutcome, CliError> {
    log::info!(
        "run: problem={} method={} eps={} seed={}",
        config.problem.kind(),
        config.method.kind(),
        config.method.eps(),
        config.seed
    );
    let start = Instant::now();
    let (log, solution, format) = match &config.problem {
        ProblemConfig::Quadratic { diagonal } => run_quadratic(config, diagonal)?,
        ProblemConfig::PdeInverse { approach, modes, data_path, noise, sharp_constant, r_guess } => {
            run_pde(config, *approach, modes, data_path.as_deref(), *noise, *sharp_constant, *r_guess)?
        }
        ProblemConfig::ControlLq { damped } => run_control(config, *damped)?,
        ProblemConfig::DualMinNorm { operator, data } => run_dual_min_norm(config, operator, data)?,
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    log::info!(
        "done: status={} J={} iterations={} wall_ms={wall_ms:.1}",
        status_name(log.status()),
        log.final_value(),
        log.iterations()
    );
    Ok(RunOutcome { label: config.label(), log, solution, format, wall_ms })
}

/// Runs a primal method on any oracle whose optimal value is `j_star`;
/// `l_default` is the problem's exact constant when one is known.
fn dispatch_primal<O: Oracle>(
    oracle: &O,
    method: &MethodConfig,
    l_default: Option<f64>,
    j_star: f64,
) -> Result<(RunLog, HVector), CliError> {
    let y0 = oracle.space().zeros();
    let pick_l = |l: Option<f64>| -> Result<f64, CliError> {
        l.or(l_default).ok_or_else(|| {
            CliError::Config("field `l`: required (no exact constant is known here)".into())
        })
    };
    let stop = |eps: f64, max_iter: usize| {
        StopRule::Any(vec![StopRule::ObjectiveBelow(j_star + eps), StopRule::MaxIter(max_iter)])
    };
    let result = match *method {
        MethodConfig::Stm { l, mu, eps, max_iter, .. } => run_method(
            &MethodSpec::Stm { l: pick_l(l)?, mu },
            oracle,
            &y0,
            &stop(eps, max_iter),
        )?,
        MethodConfig::Astm { mu, eps, max_iter, .. } => {
            run_method(&MethodSpec::Astm { mu }, oracle, &y0, &stop(eps, max_iter))?
        }
        MethodConfig::Gd { l, eps, max_iter } => {
            let step = match l {
                Some(l) => GdStep::Fixed(l),
                None => GdStep::Adaptive,
            };
            run_method(&MethodSpec::Gd { step, averaged: false }, oracle, &y0, &stop(eps, max_iter))?
        }
        MethodConfig::GdAveraged { l, eps, max_iter, .. } => {
            let step = match l {
                Some(l) => GdStep::Fixed(l),
                None => GdStep::Adaptive,
            };
            run_method(&MethodSpec::Gd { step, averaged: true }, oracle, &y0, &stop(eps, max_iter))?
        }
        MethodConfig::Rstm { l, mu0, eps, max_iter } => {
            let segment = match l {
                Some(l) => RstmSegment::FixedLength(l),
                None => RstmSegment::Adaptive,
            };
            rstm(oracle, &y0, segment, mu0, eps, max_iter)?
        }
    };
    Ok((result.log, result.solution))
}

fn run_quadratic(
    config: &RunConfig,
    diagonal: &[f64],
) -> Result<(RunLog, HVector, SolutionFormat), CliError> {
    let op = DiagonalOperator::new(diagonal.to_vec(), 1.0);
    // Data = D * ones, so the optimum is the all-ones vector and J* = 0.
    let data = HVector::new(diagonal.to_vec(), 1.0);
    let l_exact = diagonal.iter().fold(0.0f64, |m, d| m.max(d * d));
    let mu_exact = diagonal.iter().fold(f64::INFINITY, |m, d| m.min(d * d));
    let base = LeastSquares::new(op, data)?
        .declare_compatible()
        .with_l_hint(l_exact)
        .with_mu(mu_exact);
    let (log, solution) = match config.delta {
        Some(delta) => {
            let noisy = perturb(base, delta, config.diameter.expect("validated"), config.seed)?;
            dispatch_primal(&noisy, &config.method, Some(l_exact), 0.0)?
        }
        None => dispatch_primal(&base, &config.method, Some(l_exact), 0.0)?,
    };
    Ok((log, solution, SolutionFormat::Plain))
}

fn run_control(
    config: &RunConfig,
    damped: bool,
) -> Result<(RunLog, HVector, SolutionFormat), CliError> {
    let steps = config.steps.expect("validated");
    let grid = ControlGrid::new(1.0, steps)?;
    if damped {
        let j_star = damped_lq_discrete_optimum(steps);
        let oracle = control_oracle(damped_lq_benchmark(), grid)?
            .with_l_hint(2.0)
            .with_mu_hint(1.0)
            .declare_optimum(j_star);
        control_with(config, oracle, j_star)
    } else {
        let oracle = control_oracle(lq_benchmark(), grid)?
            .with_l_hint(2.0)
            .with_mu_hint(1.0)
            .declare_optimum(0.25);
        control_with(config, oracle, 0.25)
    }
}

fn control_with<P: ControlProblem>(
    config: &RunConfig,
    oracle: hdopt::control::ControlOracle<P>,
    j_star: f64,
) -> Result<(RunLog, HVector, SolutionFormat), CliError> {
    let (log, solution) = match config.delta {
        Some(delta) => {
            let noisy = perturb(oracle, delta, config.diameter.expect("validated"), config.seed)?;
            dispatch_primal(&noisy, &config.method, Some(2.0), j_star)?
        }
        None => dispatch_primal(&oracle, &config.method, Some(2.0), j_star)?,
    };
    Ok((log, solution, SolutionFormat::Control))
}

fn synthesize_wall_data(modes: &[ModeConfig], grid: Grid) -> HVector {
    grid.sample(|y| {
        modes
            .iter()
            .map(|m| m.amplitude * (m.k as f64 * core::f64::consts::PI * y).sin())
            .sum()
    })
}

fn run_pde(
    config: &RunConfig,
    approach: ApproachConfig,
    modes: &[ModeConfig],
    data_path: Option<&str>,
    noise: Option<f64>,
    sharp_constant: bool,
    r_guess: Option<f64>,
) -> Result<(RunLog, HVector, SolutionFormat), CliError> {
    let n = config.grid_n.expect("validated");
    let grid = Grid::new(n)?;
    let mut f = match data_path {
        Some(path) => {
            let f = csvio::read_boundary(std::path::Path::new(path))?;
            if f.len() != n {
                return Err(CliError::Config(format!(
                    "field `data_path`: file has {} rows but grid_n = {n}",
                    f.len()
                )));
            }
            f
        }
        None => {
            let q_true = synthesize_wall_data(modes, grid);
            solve_forward(&q_true, grid)?
        }
    };
    if let Some(sigma) = noise {
        if sigma > 0.0 {
            let direction = grid.space().random(config.seed ^ NOISE_SALT);
            f.axpy(sigma / direction.norm(), &direction);
        }
    }

    let eps = config.method.eps();
    let max_iter = config.method.max_iter();
    let (solution, log) = match approach {
        ApproachConfig::PrimalLeastSquares => {
            let lib_method = match config.method {
                MethodConfig::Stm { .. } => InverseMethod::Stm,
                MethodConfig::Astm { .. } => InverseMethod::Astm,
                MethodConfig::Gd { .. } => InverseMethod::Gd,
                MethodConfig::GdAveraged { .. } => InverseMethod::GdAveraged,
                MethodConfig::Rstm { .. } => unreachable!("rejected by validation"),
            };
            inverse_solve(
                &f,
                grid,
                InverseApproach::PrimalLeastSquares,
                lib_method,
                eps,
                max_iter,
                sharp_constant,
            )?
        }
        ApproachConfig::DualMinNorm => {
            // Routed directly (not through `inverse_solve`) so a configured
            // feasibility target distinct from the gap target is honored.
            let method = match config.method {
                MethodConfig::Stm { .. } => DualMethod::Stm,
                MethodConfig::Astm { .. } => DualMethod::Astm,
                MethodConfig::GdAveraged { .. } => DualMethod::GdAveraged,
                _ => unreachable!("rejected by validation"),
            };
            let eps_tilde = config.method.eps_tilde().unwrap_or(eps);
            let problem = min_norm_dual(make_operator(grid), f)?;
            let sol = solve_dual(&problem, method, eps, eps_tilde, max_iter)?;
            (sol.primal, sol.log)
        }
        ApproachConfig::DualRegularized => {
            if !matches!(config.method, MethodConfig::Stm { .. }) {
                return Err(CliError::Config(
                    "field `method`: the regularized dual runs the accelerated method \
                     at its estimated constant; set kind = stm"
                        .into(),
                ));
            }
            let eps_tilde = config.method.eps_tilde().unwrap_or(eps);
            let problem = min_norm_dual(make_operator(grid), f)?;
            let sol =
                solve_dual_regularized(&problem, eps, eps_tilde, r_guess.unwrap_or(1.0))?;
            (sol.primal, sol.log)
        }
    };
    Ok((log, solution, SolutionFormat::Boundary))
}

fn run_dual_min_norm(
    config: &RunConfig,
    operator: &OperatorConfig,
    data: &[f64],
) -> Result<(RunLog, HVector, SolutionFormat), CliError> {
    let f = HVector::new(data.to_vec(), 1.0);
    let method = match config.method {
        MethodConfig::Stm { .. } => DualMethod::Stm,
        MethodConfig::Astm { .. } => DualMethod::Astm,
        MethodConfig::GdAveraged { .. } => DualMethod::GdAveraged,
        _ => unreachable!("rejected by validation"),
    };
    let eps = config.method.eps();
    let eps_tilde = config.method.eps_tilde().unwrap_or(eps);
    let max_iter = config.method.max_iter();
    let solution = match operator {
        OperatorConfig::Diagonal { entries } => {
            let problem = min_norm_dual(DiagonalOperator::new(entries.clone(), 1.0), f)?;
            solve_dual(&problem, method, eps, eps_tilde, max_iter)?
        }
        OperatorConfig::Dense { rows, cols, entries } => {
            let op = MatrixOperator::new(*rows, *cols, entries.clone(), 1.0, 1.0);
            let problem = min_norm_dual(op, f)?;
            solve_dual(&problem, method, eps, eps_tilde, max_iter)?
        }
    };
    Ok((solution.log, solution.primal, SolutionFormat::Plain))
}
