//! Experiment harness around the `hdopt` solver library.
//!
//! The binary (`hdopt`) reads JSON run configurations, builds the configured
//! problem and method, executes the solve, and emits:
//!
//! - a per-iteration CSV log (`k,J,grad_norm,A_k,L_used,func_evals,
//!   grad_evals,feasibility,elapsed_ms`),
//! - a one-line JSON summary on standard output (final objective, gradient
//!   norm, iteration and evaluation counts, wall time),
//! - optionally, the recovered solution as a boundary-data (`y,value`) or
//!   control (`t,u`) CSV.
//!
//! `compare` runs several configurations of the same problem side by side
//! and writes a wide CSV aligning their objective and feasibility columns,
//! with a footer row of fitted convergence exponents.
//!
//! Everything an acceptance pipeline consumes is reproducible: a
//! configuration plus its seed determines every CSV byte (iteration logs use
//! the deterministic null clock; only the stdout summary carries measured
//! wall time).

pub mod compare;
pub mod config;
pub mod csvio;
pub mod fit;
pub mod runner;

pub use compare::{compare, CompareReport};
pub use config::{CliError, MethodConfig, ProblemConfig, RunConfig};
pub use runner::{execute, RunOutcome, SolutionFormat};
