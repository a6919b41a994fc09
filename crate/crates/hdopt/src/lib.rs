//! First-order convex optimization on weighted-grid Hilbert spaces.
//!
//! The crate targets objectives `J: H -> R` on a finite-dimensional space `H`
//! whose inner product carries a quadrature weight, `<u, v> = w * sum_i u_i v_i`,
//! so that grid functions approximate `L_2(0, 1)` elements and method behaviour
//! is mesh-independent. On top of that space it provides:
//!
//! * [`hilbert`] — weighted vectors, linear operators, power-method operator
//!   norms and adjoint-consistency diagnostics;
//! * [`oracle`] — first-order oracles (value + gradient), least-squares
//!   oracles built from linear operators, Tikhonov-style regularization,
//!   deterministic bounded perturbations for inexact-oracle studies, and a
//!   finite-difference gradient check;
//! * [`solvers`] — the similar-triangles method (STM), its adaptive variant
//!   (ASTM), gradient-descent variants, restart schemes, an L-doubling
//!   calibration loop, and an accuracy-driven discretization budget driver;
//! * [`dual`] — dual solvers for linearly constrained problems
//!   `min g(q) s.t. Aq = f` with averaged primal recovery and a regularized
//!   variant for unknown dual-solution norms;
//! * [`pde`] — a finite-difference Cauchy-continuation operator for the
//!   Laplace equation on the unit square (the classic severely ill-posed
//!   sideways problem) used as the main infinite-dimensional test bed;
//! * [`control`] — forward-Euler simulation, exact discrete adjoints, and a
//!   first-order oracle for convex optimal-control problems.
//!
//! The crate is `no_std` + `alloc`: everything here is deterministic pure
//! computation. File formats, timing, and the command-line harness live in
//! the companion `hdopt-cli` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

mod error;
pub mod control;
pub mod dual;
pub mod hilbert;
pub mod oracle;
pub mod pde;
pub mod solvers;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
