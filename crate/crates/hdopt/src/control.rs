//! Convex optimal control by forward-Euler simulation and exact discrete
//! adjoints.
//!
//! The continuous problem is
//!
//! ```text
//!     J(u) = integral_0^T f0(t, x(t), u(t)) dt + Phi(x(T))  ->  min,
//!     x'(t) = f(t, x(t), u(t)),    x(0) = x0,
//! ```
//!
//! with `f` affine in `(x, u)` and `f0`, `Phi` convex, so `J` is convex in
//! the control. States and controls are sampled on the *same* uniform
//! lattice `t^k = k tau`, `tau = T/steps` — significant, because then the
//! adjoint of the discrete forward map lives on that lattice too and the
//! chain rule closes exactly.
//!
//! With the Hamiltonian `H(t, x, u, psi) = f0(t, x, u) + <psi, f(t, x, u)>`,
//! one forward sweep plus one backward sweep yields the gradient
//! `grad J(u) at t^k = H_u(t^k, x^k, u^k, psi^{k+1})` of the *discrete*
//! objective, exactly: the oracle carries no inexactness of its own
//! (`delta = 0`), while the gap to the continuum optimum decays like
//! `O(tau)` — first order in the step (`p = 1`), with per-evaluation work
//! growing like `tau^-1` (`r = 1`). That pairing is what the
//! accuracy-budget driver exploits: aiming for accuracy `eps` with the
//! accelerated method wants `tau ~ eps^(3/2)` and lands at total work
//! `~ eps^-2`.

use alloc::vec;
use alloc::vec::Vec;

// Redundant when a std build is in the crate graph, required for no_std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::hilbert::{HVector, Space};
use crate::oracle::{Oracle, OracleInfo};
use crate::solvers::DiscretizationFamily;
use crate::{Error, Result};

/// Uniform time lattice with `steps` intervals over `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlGrid {
    steps: usize,
    horizon: f64,
}

impl ControlGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::bad_param("horizon", "must be positive and finite"));
        }
        if steps == 0 {
            return Err(Error::bad_param("steps", "need at least one time step"));
        }
        Ok(ControlGrid { steps, horizon })
    }

    pub fn steps(self) -> usize {
        self.steps
    }

    pub fn horizon(self) -> f64 {
        self.horizon
    }

    pub fn tau(self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(self, k: usize) -> f64 {
        k as f64 * self.tau()
    }

    /// The Hilbert space of discrete controls: `steps * control_dim`
    /// samples weighted by `tau`, the rectangle-rule stand-in for
    /// `L2(0, T)`.
    pub fn control_space(self, control_dim: usize) -> Space {
        Space::new(self.steps * control_dim, self.tau())
    }
}

/// Coefficients of the affine dynamics `f(t, x, u) = A x + B u + c` at one
/// time; all matrices row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineDynamics {
    /// `state_dim x state_dim`.
    pub a: Vec<f64>,
    /// `state_dim x control_dim`.
    pub b: Vec<f64>,
    /// `state_dim`.
    pub c: Vec<f64>,
}

/// A convex control problem: affine dynamics, convex running and terminal
/// costs, all supplied through coefficient callbacks.
///
/// Convexity of the discrete objective follows automatically: the state is
/// affine in the control, and convex functions compose with affine maps.
/// Implementations must keep `dynamics` affine and the costs convex; the
/// library cannot check that.
pub trait ControlProblem {
    fn horizon(&self) -> f64;
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn initial_state(&self) -> Vec<f64>;
    fn dynamics(&self, t: f64) -> AffineDynamics;
    fn running_cost(&self, t: f64, x: &[f64], u: &[f64]) -> f64;
    /// Gradient of the running cost in `x`.
    fn running_cost_grad_state(&self, t: f64, x: &[f64], u: &[f64]) -> Vec<f64>;
    /// Gradient of the running cost in `u`.
    fn running_cost_grad_control(&self, t: f64, x: &[f64], u: &[f64]) -> Vec<f64>;
    fn terminal_cost(&self, x: &[f64]) -> f64;
    fn terminal_cost_grad(&self, x: &[f64]) -> Vec<f64>;
}

impl<P: ControlProblem + ?Sized> ControlProblem for &P {
    fn horizon(&self) -> f64 {
        (**self).horizon()
    }
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn control_dim(&self) -> usize {
        (**self).control_dim()
    }
    fn initial_state(&self) -> Vec<f64> {
        (**self).initial_state()
    }
    fn dynamics(&self, t: f64) -> AffineDynamics {
        (**self).dynamics(t)
    }
    fn running_cost(&self, t: f64, x: &[f64], u: &[f64]) -> f64 {
        (**self).running_cost(t, x, u)
    }
    fn running_cost_grad_state(&self, t: f64, x: &[f64], u: &[f64]) -> Vec<f64> {
        (**self).running_cost_grad_state(t, x, u)
    }
    fn running_cost_grad_control(&self, t: f64, x: &[f64], u: &[f64]) -> Vec<f64> {
        (**self).running_cost_grad_control(t, x, u)
    }
    fn terminal_cost(&self, x: &[f64]) -> f64 {
        (**self).terminal_cost(x)
    }
    fn terminal_cost_grad(&self, x: &[f64]) -> Vec<f64> {
        (**self).terminal_cost_grad(x)
    }
}

/// A state or adjoint trajectory: `steps + 1` nodes of fixed dimension,
/// stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    values: Vec<f64>,
    dim: usize,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn at(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn final_state(&self) -> &[f64] {
        self.at(self.node_count() - 1)
    }
}

/// Which endpoint the backward sweep evaluates its coefficients at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjointScheme {
    /// Exact transpose of the forward Euler step: coefficients at the left
    /// endpoint `t^k`, matching where the forward sweep used them. The
    /// gradient assembled from this sweep differentiates the discrete
    /// objective exactly, which is what line-searching optimizers need.
    DiscreteExact,
    /// Textbook discretize-the-continuous-adjoint sweep: coefficients at
    /// the right endpoint `t^{k+1}` (the final control index clamped).
    /// Differs from the exact transpose by `O(tau)`; kept for fidelity
    /// comparisons, not for driving optimization.
    RightEndpoint,
}

fn check_control<P: ControlProblem>(problem: &P, u: &HVector, grid: ControlGrid) -> Result<()> {
    let expected = grid.steps() * problem.control_dim();
    if u.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: u.len(),
            what: "discrete control vs grid",
        });
    }
    let t = problem.horizon();
    if !((grid.horizon() - t).abs() <= 1e-12 * t.max(1.0)) {
        return Err(Error::bad_param("grid", "horizon differs from the problem's"));
    }
    Ok(())
}

/// Explicit (forward) Euler on the state equation:
/// `x^{k+1} = x^k + tau f(t^k, x^k, u^k)`, `x^0 = x0`.
///
/// Global accuracy is `O(tau)` against the exact flow; a non-finite state
/// aborts with [`Error::NonFiniteState`].
pub fn simulate_forward<P: ControlProblem>(
    problem: &P,
    u: &HVector,
    grid: ControlGrid,
) -> Result<Trajectory> {
    check_control(problem, u, grid)?;
    let nx = problem.state_dim();
    let m = problem.control_dim();
    let tau = grid.tau();
    let steps = grid.steps();

    let mut x = problem.initial_state();
    assert_eq!(x.len(), nx, "initial state dimension");
    let mut values = Vec::with_capacity((steps + 1) * nx);
    values.extend_from_slice(&x);
    let mut next = vec![0.0; nx];
    for k in 0..steps {
        let dynamics = problem.dynamics(grid.time(k));
        debug_assert_eq!(dynamics.a.len(), nx * nx);
        debug_assert_eq!(dynamics.b.len(), nx * m);
        debug_assert_eq!(dynamics.c.len(), nx);
        let uk = &u.as_slice()[k * m..(k + 1) * m];
        for i in 0..nx {
            let mut rate = dynamics.c[i];
            for (j, xj) in x.iter().enumerate() {
                rate += dynamics.a[i * nx + j] * xj;
            }
            for (l, ul) in uk.iter().enumerate() {
                rate += dynamics.b[i * m + l] * ul;
            }
            next[i] = x[i] + tau * rate;
        }
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteState { step: k + 1 });
        }
        values.extend_from_slice(&next);
        x.copy_from_slice(&next);
    }
    Ok(Trajectory { values, dim: nx })
}

/// Backward sweep for the adjoint state:
/// `psi^steps = grad Phi(x^steps)`,
/// `psi^k = psi^{k+1} + tau (grad_x f0 + A^T psi^{k+1})`,
/// coefficients evaluated per [`AdjointScheme`].
pub fn simulate_adjoint<P: ControlProblem>(
    problem: &P,
    u: &HVector,
    x: &Trajectory,
    grid: ControlGrid,
    scheme: AdjointScheme,
) -> Result<Trajectory> {
    check_control(problem, u, grid)?;
    let nx = problem.state_dim();
    let m = problem.control_dim();
    let steps = grid.steps();
    if x.dim() != nx || x.node_count() != steps + 1 {
        return Err(Error::DimensionMismatch {
            expected: (steps + 1) * nx,
            got: x.values.len(),
            what: "state trajectory vs grid",
        });
    }
    let tau = grid.tau();

    let mut psi = problem.terminal_cost_grad(x.final_state());
    assert_eq!(psi.len(), nx, "terminal cost gradient dimension");
    let mut values = vec![0.0; (steps + 1) * nx];
    values[steps * nx..].copy_from_slice(&psi);
    let mut prev = vec![0.0; nx];
    for k in (0..steps).rev() {
        // The exact transpose differentiates step k where the forward sweep
        // evaluated it; the textbook sweep samples the right endpoint.
        let (t_eval, x_eval, u_index) = match scheme {
            AdjointScheme::DiscreteExact => (grid.time(k), x.at(k), k),
            AdjointScheme::RightEndpoint => {
                (grid.time(k + 1), x.at(k + 1), (k + 1).min(steps - 1))
            }
        };
        let uk = &u.as_slice()[u_index * m..(u_index + 1) * m];
        let gx = problem.running_cost_grad_state(t_eval, x_eval, uk);
        debug_assert_eq!(gx.len(), nx);
        let dynamics = problem.dynamics(t_eval);
        for i in 0..nx {
            let mut pull = gx[i];
            for (j, pj) in psi.iter().enumerate() {
                // A^T psi: column i of A against psi.
                pull += dynamics.a[j * nx + i] * pj;
            }
            prev[i] = psi[i] + tau * pull;
        }
        if !prev.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteState { step: k });
        }
        values[k * nx..(k + 1) * nx].copy_from_slice(&prev);
        psi.copy_from_slice(&prev);
    }
    Ok(Trajectory { values, dim: nx })
}

/// First-order oracle for the discrete control objective
/// `J_d(u) = tau sum_k f0(t^k, x^k, u^k) + Phi(x^steps)`.
///
/// The gradient is the exact gradient of `J_d` (assembled from the
/// [`AdjointScheme::DiscreteExact`] sweep), so the oracle's own inexactness
/// is zero; the `O(tau)` gap to the continuum is model error, tracked by
/// discretization families rather than by `delta`. A simulation blow-up
/// surfaces as a non-finite value/gradient, which solvers report as a
/// non-finite terminal status.
pub struct ControlOracle<P: ControlProblem> {
    problem: P,
    grid: ControlGrid,
    info: OracleInfo,
}

/// Builds the oracle, validating the problem/grid pairing.
pub fn control_oracle<P: ControlProblem>(
    problem: P,
    grid: ControlGrid,
) -> Result<ControlOracle<P>> {
    if problem.state_dim() == 0 {
        return Err(Error::bad_param("state_dim", "must be positive"));
    }
    if problem.control_dim() == 0 {
        return Err(Error::bad_param("control_dim", "must be positive"));
    }
    if problem.initial_state().len() != problem.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.state_dim(),
            got: problem.initial_state().len(),
            what: "initial state vs state_dim",
        });
    }
    let t = problem.horizon();
    if !((grid.horizon() - t).abs() <= 1e-12 * t.max(1.0)) {
        return Err(Error::bad_param("grid", "horizon differs from the problem's"));
    }
    Ok(ControlOracle { problem, grid, info: OracleInfo::default() })
}

impl<P: ControlProblem> ControlOracle<P> {
    /// Records a known curvature bound of the discrete objective.
    pub fn with_l_hint(mut self, l: f64) -> Self {
        self.info.l_hint = Some(l);
        self
    }

    /// Records a known strong-convexity modulus.
    pub fn with_mu_hint(mut self, mu: f64) -> Self {
        self.info.mu_hint = Some(mu);
        self
    }

    /// Declares the optimal value the run should be measured against
    /// (typically the continuum optimum of a benchmark).
    pub fn declare_optimum(mut self, j_star: f64) -> Self {
        self.info.j_star = Some(j_star);
        self
    }

    pub fn grid(&self) -> ControlGrid {
        self.grid
    }

    pub fn problem(&self) -> &P {
        &self.problem
    }

    fn discrete_value(&self, u: &HVector, x: &Trajectory) -> f64 {
        let m = self.problem.control_dim();
        let tau = self.grid.tau();
        let mut acc = 0.0;
        for k in 0..self.grid.steps() {
            let uk = &u.as_slice()[k * m..(k + 1) * m];
            acc += self.problem.running_cost(self.grid.time(k), x.at(k), uk);
        }
        tau * acc + self.problem.terminal_cost(x.final_state())
    }

    fn gradient_parts(&self, u: &HVector, x: &Trajectory) -> Result<HVector> {
        let psi = simulate_adjoint(&self.problem, u, x, self.grid, AdjointScheme::DiscreteExact)?;
        let m = self.problem.control_dim();
        let mut g = vec![0.0; self.grid.steps() * m];
        for k in 0..self.grid.steps() {
            let t = self.grid.time(k);
            let uk = &u.as_slice()[k * m..(k + 1) * m];
            let mut gu = self.problem.running_cost_grad_control(t, x.at(k), uk);
            debug_assert_eq!(gu.len(), m);
            let dynamics = self.problem.dynamics(t);
            let pull = psi.at(k + 1);
            for (l, gl) in gu.iter_mut().enumerate() {
                for (i, pi) in pull.iter().enumerate() {
                    // B^T psi^{k+1}: column l of B against psi.
                    *gl += dynamics.b[i * m + l] * pi;
                }
            }
            g[k * m..(k + 1) * m].copy_from_slice(&gu);
        }
        Ok(HVector::new(g, self.grid.tau()))
    }

    fn non_finite_gradient(&self) -> HVector {
        HVector::new(
            vec![f64::NAN; self.grid.steps() * self.problem.control_dim()],
            self.grid.tau(),
        )
    }
}

impl<P: ControlProblem> Oracle for ControlOracle<P> {
    fn space(&self) -> Space {
        self.grid.control_space(self.problem.control_dim())
    }

    fn value(&self, u: &HVector) -> f64 {
        match simulate_forward(&self.problem, u, self.grid) {
            Ok(x) => self.discrete_value(u, &x),
            Err(_) => f64::INFINITY,
        }
    }

    fn gradient(&self, u: &HVector) -> HVector {
        self.value_and_gradient(u).1
    }

    fn value_and_gradient(&self, u: &HVector) -> (f64, HVector) {
        match simulate_forward(&self.problem, u, self.grid) {
            Ok(x) => match self.gradient_parts(u, &x) {
                Ok(g) => (self.discrete_value(u, &x), g),
                Err(_) => (f64::INFINITY, self.non_finite_gradient()),
            },
            Err(_) => (f64::INFINITY, self.non_finite_gradient()),
        }
    }

    fn info(&self) -> OracleInfo {
        self.info
    }
}

/// The shipped benchmark:
/// `min integral_0^1 u^2/2 dt + (x(1) - 1)^2/2`, `x' = u`, `x(0) = 0`.
///
/// Optimal control `u* = 1/2`, optimal value `1/4` — in the continuum *and*
/// in every discretization: the discrete objective
/// `tau sum u_k^2/2 + (tau sum u_k - 1)^2/2` is symmetric in the `u_k`, so
/// its optimum is the same constant control and the same value. In the
/// weighted control space its Hessian is `I + tau 1 1^T`, giving the exact
/// constants `L = 1 + T = 2` and `mu = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LqProblem;

/// See [`LqProblem`].
pub fn lq_benchmark() -> LqProblem {
    LqProblem
}

impl ControlProblem for LqProblem {
    fn horizon(&self) -> f64 {
        1.0
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn control_dim(&self) -> usize {
        1
    }
    fn initial_state(&self) -> Vec<f64> {
        vec![0.0]
    }
    fn dynamics(&self, _t: f64) -> AffineDynamics {
        AffineDynamics { a: vec![0.0], b: vec![1.0], c: vec![0.0] }
    }
    fn running_cost(&self, _t: f64, _x: &[f64], u: &[f64]) -> f64 {
        0.5 * u[0] * u[0]
    }
    fn running_cost_grad_state(&self, _t: f64, _x: &[f64], _u: &[f64]) -> Vec<f64> {
        vec![0.0]
    }
    fn running_cost_grad_control(&self, _t: f64, _x: &[f64], u: &[f64]) -> Vec<f64> {
        vec![u[0]]
    }
    fn terminal_cost(&self, x: &[f64]) -> f64 {
        0.5 * (x[0] - 1.0) * (x[0] - 1.0)
    }
    fn terminal_cost_grad(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0] - 1.0]
    }
}

/// Damped companion benchmark:
/// `min integral_0^1 u^2/2 dt + x(1)^2/2`, `x' = -x + u`, `x(0) = 1`.
///
/// Unlike [`LqProblem`], here the discrete optimum genuinely differs from
/// the continuum one, by `O(tau)` — the clean instance for measuring the
/// model-error law. Both optima are closed-form; see
/// [`damped_lq_continuum_optimum`] and [`damped_lq_discrete_optimum`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DampedLqProblem;

/// See [`DampedLqProblem`].
pub fn damped_lq_benchmark() -> DampedLqProblem {
    DampedLqProblem
}

impl ControlProblem for DampedLqProblem {
    fn horizon(&self) -> f64 {
        1.0
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn control_dim(&self) -> usize {
        1
    }
    fn initial_state(&self) -> Vec<f64> {
        vec![1.0]
    }
    fn dynamics(&self, _t: f64) -> AffineDynamics {
        AffineDynamics { a: vec![-1.0], b: vec![1.0], c: vec![0.0] }
    }
    fn running_cost(&self, _t: f64, _x: &[f64], u: &[f64]) -> f64 {
        0.5 * u[0] * u[0]
    }
    fn running_cost_grad_state(&self, _t: f64, _x: &[f64], _u: &[f64]) -> Vec<f64> {
        vec![0.0]
    }
    fn running_cost_grad_control(&self, _t: f64, _x: &[f64], u: &[f64]) -> Vec<f64> {
        vec![u[0]]
    }
    fn terminal_cost(&self, x: &[f64]) -> f64 {
        0.5 * x[0] * x[0]
    }
    fn terminal_cost_grad(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0]]
    }
}

/// Continuum optimal value of [`DampedLqProblem`]: by the maximum principle
/// `u*(t) = -x(1) e^(t-1)` with `x(1) = 2e/(3e^2 - 1)`, which works out to
/// `J* = 1/(3 e^2 - 1)`.
pub fn damped_lq_continuum_optimum() -> f64 {
    let e = core::f64::consts::E;
    1.0 / (3.0 * e * e - 1.0)
}

/// Discrete optimal value of [`DampedLqProblem`] at `steps` Euler steps:
/// with `rho = 1 - tau`, eliminating the control from the stationarity
/// system gives
///
/// ```text
///     J_d* = rho^(2 steps) / (2 (1 + tau S)),
///     S    = (1 - rho^(2 steps)) / (1 - rho^2).
/// ```
///
/// Approaches the continuum value from below at rate `O(tau)`.
pub fn damped_lq_discrete_optimum(steps: usize) -> f64 {
    assert!(steps > 0, "need at least one step");
    let tau = 1.0 / steps as f64;
    let rho = 1.0 - tau;
    let rho2n = rho.powi(2 * steps as i32);
    let s = (1.0 - rho2n) / (1.0 - rho * rho);
    0.5 * rho2n / (1.0 + tau * s)
}

/// [`LqProblem`] as a discretization family for the accuracy-budget driver:
/// `build(tau)` rounds to the nearest admissible step count and declares the
/// exact constants `L = 2`, `mu = 1`, `J* = 1/4`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LqFamily;

impl DiscretizationFamily for LqFamily {
    type Oracle = ControlOracle<LqProblem>;

    fn build(&self, tau: f64) -> Result<Self::Oracle> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::bad_param("tau", "must be positive and finite"));
        }
        let steps = (1.0 / tau).round().max(1.0) as usize;
        Ok(control_oracle(LqProblem, ControlGrid::new(1.0, steps)?)?
            .with_l_hint(2.0)
            .with_mu_hint(1.0)
            .declare_optimum(0.25))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::finite_diff_defect;
    use crate::solvers::{
        accuracy_budget, astm, BudgetMethod, StopRule, TerminalStatus,
    };
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// `x' = x` with an unused control, for the compound-growth checks.
    struct GrowthProblem {
        horizon: f64,
    }

    impl ControlProblem for GrowthProblem {
        fn horizon(&self) -> f64 {
            self.horizon
        }
        fn state_dim(&self) -> usize {
            1
        }
        fn control_dim(&self) -> usize {
            1
        }
        fn initial_state(&self) -> Vec<f64> {
            vec![1.0]
        }
        fn dynamics(&self, _t: f64) -> AffineDynamics {
            AffineDynamics { a: vec![1.0], b: vec![0.0], c: vec![0.0] }
        }
        fn running_cost(&self, _t: f64, _x: &[f64], _u: &[f64]) -> f64 {
            0.0
        }
        fn running_cost_grad_state(&self, _t: f64, _x: &[f64], _u: &[f64]) -> Vec<f64> {
            vec![0.0]
        }
        fn running_cost_grad_control(&self, _t: f64, _x: &[f64], _u: &[f64]) -> Vec<f64> {
            vec![0.0]
        }
        fn terminal_cost(&self, _x: &[f64]) -> f64 {
            0.0
        }
        fn terminal_cost_grad(&self, _x: &[f64]) -> Vec<f64> {
            vec![0.0]
        }
    }

    /// Two states, time-varying coefficients, coupled convex costs: the
    /// instance where the two adjoint schemes genuinely differ.
    struct VaryingProblem;

    impl ControlProblem for VaryingProblem {
        fn horizon(&self) -> f64 {
            1.0
        }
        fn state_dim(&self) -> usize {
            2
        }
        fn control_dim(&self) -> usize {
            1
        }
        fn initial_state(&self) -> Vec<f64> {
            vec![0.5, -0.25]
        }
        fn dynamics(&self, t: f64) -> AffineDynamics {
            AffineDynamics {
                a: vec![0.0, 1.0, -1.0, -0.5 * t],
                b: vec![0.0, 1.0 + 0.5 * t],
                c: vec![0.1 * t, 0.0],
            }
        }
        fn running_cost(&self, t: f64, x: &[f64], u: &[f64]) -> f64 {
            0.5 * u[0] * u[0] + 0.5 * (1.0 + t) * (x[0] * x[0] + x[1] * x[1])
        }
        fn running_cost_grad_state(&self, t: f64, x: &[f64], _u: &[f64]) -> Vec<f64> {
            vec![(1.0 + t) * x[0], (1.0 + t) * x[1]]
        }
        fn running_cost_grad_control(&self, _t: f64, _x: &[f64], u: &[f64]) -> Vec<f64> {
            vec![u[0]]
        }
        fn terminal_cost(&self, x: &[f64]) -> f64 {
            0.5 * (x[0] - 1.0) * (x[0] - 1.0) + 0.5 * x[1] * x[1]
        }
        fn terminal_cost_grad(&self, x: &[f64]) -> Vec<f64> {
            vec![x[0] - 1.0, x[1]]
        }
    }

    fn constant_control(grid: ControlGrid, value: f64) -> HVector {
        HVector::new(vec![value; grid.steps()], grid.tau())
    }

    #[test]
    fn grid_validates_and_reports_the_lattice() {
        assert!(ControlGrid::new(0.0, 10).is_err());
        assert!(ControlGrid::new(1.0, 0).is_err());
        let grid = ControlGrid::new(2.0, 8).unwrap();
        assert_eq!(grid.tau(), 0.25);
        assert_eq!(grid.time(3), 0.75);
        assert_eq!(grid.control_space(3), Space::new(24, 0.25));
    }

    #[test]
    fn constant_control_integrates_exactly() {
        // x' = u with u = 1 walks to x(1) = tau * steps = 1: Euler is exact
        // for piecewise-constant integrands (binary-exact at steps = 16).
        let grid = ControlGrid::new(1.0, 16).unwrap();
        let x = simulate_forward(&lq_benchmark(), &constant_control(grid, 1.0), grid).unwrap();
        assert_eq!(x.final_state(), &[1.0]);
        assert_eq!(x.at(4), &[0.25]);
        assert_eq!(x.node_count(), 17);
    }

    #[test]
    fn compound_growth_matches_the_hand_value() {
        // x' = x from 1: Euler compounds to (1 + tau)^steps; at 100 steps
        // that is 1.01^100 = 2.70481..., an O(tau) distance from e.
        let run = |steps: usize| {
            let grid = ControlGrid::new(1.0, steps).unwrap();
            let problem = GrowthProblem { horizon: 1.0 };
            let x = simulate_forward(&problem, &constant_control(grid, 0.0), grid).unwrap();
            x.final_state()[0]
        };
        let coarse = run(100);
        assert_abs_diff_eq!(coarse, 2.70481, epsilon = 1e-5);
        let e = core::f64::consts::E;
        let ratio = (e - coarse) / (e - run(200));
        assert!((1.5..=2.6).contains(&ratio), "first-order ratio {ratio}");
    }

    #[test]
    fn blow_up_is_reported_with_the_step() {
        // x' = x at tau = 1 doubles each step and overflows near step 1024.
        let grid = ControlGrid::new(2000.0, 2000).unwrap();
        let problem = GrowthProblem { horizon: 2000.0 };
        let out = simulate_forward(&problem, &constant_control(grid, 0.0), grid);
        match out {
            Err(Error::NonFiniteState { step }) => assert!(step > 1000 && step < 1100),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn state_independent_hamiltonian_freezes_the_adjoint() {
        // For x' = u, f0 = u^2/2 the Hamiltonian has no x-dependence, so
        // psi is constant; at u = 0 it equals x(1) - 1 = -1 everywhere.
        let grid = ControlGrid::new(1.0, 12).unwrap();
        let problem = lq_benchmark();
        let u = constant_control(grid, 0.0);
        let x = simulate_forward(&problem, &u, grid).unwrap();
        for scheme in [AdjointScheme::DiscreteExact, AdjointScheme::RightEndpoint] {
            let psi = simulate_adjoint(&problem, &u, &x, grid, scheme).unwrap();
            for k in 0..=grid.steps() {
                assert_eq!(psi.at(k), &[-1.0]);
            }
        }
    }

    #[test]
    fn affine_adjoint_recursion_is_geometric() {
        // With constant a = -1 and no x-cost the sweep reads
        // psi^k = (1 - tau) psi^{k+1}: a pure geometric decay from the
        // terminal gradient, identical for both schemes.
        let grid = ControlGrid::new(1.0, 10).unwrap();
        let problem = damped_lq_benchmark();
        let u = constant_control(grid, 0.25);
        let x = simulate_forward(&problem, &u, grid).unwrap();
        let exact = simulate_adjoint(&problem, &u, &x, grid, AdjointScheme::DiscreteExact).unwrap();
        let right = simulate_adjoint(&problem, &u, &x, grid, AdjointScheme::RightEndpoint).unwrap();
        let terminal = x.final_state()[0];
        let rho = 1.0 - grid.tau();
        for k in 0..=grid.steps() {
            let expected = terminal * rho.powi(grid.steps() as i32 - k as i32);
            assert_abs_diff_eq!(exact.at(k)[0], expected, epsilon = 1e-14);
            assert_abs_diff_eq!(right.at(k)[0], expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn lq_oracle_values_by_hand() {
        // steps = 4, u = (1, 2, 3, 4): states 0, .25, .75, 1.5, 2.5;
        // J = .25 * (1 + 4 + 9 + 16)/2 + (2.5 - 1)^2 / 2 = 4.875;
        // psi = 1.5 throughout, so g = u + 1.5 exactly.
        let grid = ControlGrid::new(1.0, 4).unwrap();
        let oracle = control_oracle(lq_benchmark(), grid).unwrap();
        let u = HVector::new(vec![1.0, 2.0, 3.0, 4.0], 0.25);
        let (value, gradient) = oracle.value_and_gradient(&u);
        assert_eq!(value, 4.875);
        assert_eq!(gradient.as_slice(), &[2.5, 3.5, 4.5, 5.5]);
        assert_eq!(oracle.value(&u), 4.875);
        assert_eq!(oracle.gradient(&u).as_slice(), gradient.as_slice());
        assert_eq!(oracle.space(), Space::new(4, 0.25));
        assert_eq!(oracle.info().delta, 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences_exactly() {
        // The discrete-adjoint gradient differentiates the discrete
        // objective exactly (round-off-level central-difference defect),
        // while a gradient assembled from the right-endpoint sweep is only
        // O(tau)-consistent — the reason the exact form drives line
        // searches.
        let grid = ControlGrid::new(1.0, 13).unwrap();
        let oracle = control_oracle(VaryingProblem, grid).unwrap();
        let u = oracle.space().random(0xC0FFEE);
        assert!(finite_diff_defect(&oracle, &u, 1e-5) <= 1e-6);

        let x = simulate_forward(&VaryingProblem, &u, grid).unwrap();
        let psi_right =
            simulate_adjoint(&VaryingProblem, &u, &x, grid, AdjointScheme::RightEndpoint).unwrap();
        let mut mismatched = Vec::with_capacity(grid.steps());
        for k in 0..grid.steps() {
            let t = grid.time(k);
            let uk = &u.as_slice()[k..k + 1];
            let dynamics = VaryingProblem.dynamics(t);
            let gu = VaryingProblem.running_cost_grad_control(t, x.at(k), uk)[0];
            let pull = psi_right.at(k + 1);
            mismatched.push(gu + dynamics.b[0] * pull[0] + dynamics.b[1] * pull[1]);
        }
        let approximate = HVector::new(mismatched, grid.tau());
        let exact = oracle.gradient(&u);
        let rel = approximate.dist(&exact) / exact.norm();
        assert!(rel > 1e-6 && rel < 0.5, "schemes differ by O(tau): {rel}");
    }

    #[test]
    fn lq_benchmark_reaches_the_analytic_optimum() {
        // Continuum solution u* = 1/2, J* = 1/4; the discretized problem
        // shares them exactly, so the solver's terminal value and control
        // distance measure pure optimization error.
        let grid = ControlGrid::new(1.0, 100).unwrap();
        let oracle = control_oracle(lq_benchmark(), grid)
            .unwrap()
            .with_l_hint(2.0)
            .with_mu_hint(1.0);
        let u0 = oracle.space().zeros();
        let stop = StopRule::Any(vec![
            StopRule::ObjectiveBelow(0.25 + 1e-8),
            StopRule::MaxIter(5_000),
        ]);
        let result = astm(&oracle, &u0, 1.0, &stop).unwrap();
        assert_eq!(result.log.status(), TerminalStatus::Converged);
        assert!((result.log.final_value() - 0.25).abs() <= 1e-2);
        let target = constant_control(grid, 0.5);
        assert!(result.solution.dist(&target) <= 1e-2);

        // At the stationary control the discrete gradient vanishes to
        // round-off: the discrete and continuum optima coincide here.
        let g = oracle.gradient(&target);
        assert!(g.norm() <= 1e-12, "gradient at the optimum: {}", g.norm());
    }

    #[test]
    fn damped_lq_model_error_decays_first_order() {
        // Frozen closed-form deviations |J_d*(N) - J*|: 2.267e-3, 1.133e-3,
        // 5.662e-4, 2.831e-4 at N = 25, 50, 100, 200; log-log slope 1.0004.
        let j_star = damped_lq_continuum_optimum();
        assert_abs_diff_eq!(j_star, 0.047242974874043865, epsilon = 1e-16);
        assert_abs_diff_eq!(
            damped_lq_discrete_optimum(50),
            0.0461102275980064,
            epsilon = 1e-15
        );
        let frozen = [2.266671e-3, 1.132747e-3, 5.662144e-4, 2.830659e-4];
        let mut log_tau = Vec::new();
        let mut log_err = Vec::new();
        for (i, &steps) in [25usize, 50, 100, 200].iter().enumerate() {
            let err = (damped_lq_discrete_optimum(steps) - j_star).abs();
            assert_abs_diff_eq!(err, frozen[i], epsilon = 1e-6 * frozen[i]);
            log_tau.push((1.0 / steps as f64).ln());
            log_err.push(err.ln());
        }
        let m = log_tau.len() as f64;
        let (sx, sy): (f64, f64) = (log_tau.iter().sum(), log_err.iter().sum());
        let sxx: f64 = log_tau.iter().map(|x| x * x).sum();
        let sxy: f64 = log_tau.iter().zip(&log_err).map(|(x, y)| x * y).sum();
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        assert!((0.6..=1.4).contains(&slope), "model-error slope {slope}");

        // Cross-check the closed form against an actual solve.
        let grid = ControlGrid::new(1.0, 50).unwrap();
        let oracle = control_oracle(damped_lq_benchmark(), grid)
            .unwrap()
            .with_l_hint(2.0)
            .with_mu_hint(1.0);
        let stop = StopRule::Any(vec![
            StopRule::ObjectiveBelow(damped_lq_discrete_optimum(50) + 1e-10),
            StopRule::MaxIter(20_000),
        ]);
        let result = astm(&oracle, &oracle.space().zeros(), 1.0, &stop).unwrap();
        assert_eq!(result.log.status(), TerminalStatus::Converged);
        assert!(result.log.final_value() >= damped_lq_discrete_optimum(50) - 1e-12);
    }

    #[test]
    fn work_scales_inverse_quadratically_with_accuracy() {
        // tau ~ eps^(3/2) from the budget driver and an eps^(-1/2)
        // iteration budget combine to work ~ eps^(-2); measured exponent
        // about -2.0 across eps = 1e-1, 1e-1.5, 1e-2.
        let mut log_eps = Vec::new();
        let mut log_work = Vec::new();
        for &eps in &[1e-1, 10f64.powf(-1.5), 1e-2] {
            let result = accuracy_budget(&LqFamily, BudgetMethod::Astm, eps, 1.0, 1.0, 0.5, 0.0)
                .unwrap();
            assert_eq!(result.log.status(), TerminalStatus::Converged);
            let attempt = result.log.attempts.last().unwrap();
            assert!(attempt.success, "first budget attempt should land");
            let steps = (1.0 / attempt.tau).round();
            log_eps.push(eps.ln());
            log_work.push((attempt.budget as f64 * steps).ln());
        }
        let m = log_eps.len() as f64;
        let (sx, sy): (f64, f64) = (log_eps.iter().sum(), log_work.iter().sum());
        let sxx: f64 = log_eps.iter().map(|x| x * x).sum();
        let sxy: f64 = log_eps.iter().zip(&log_work).map(|(x, y)| x * y).sum();
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        assert!((-2.6..=-1.4).contains(&slope), "work exponent {slope}");
    }

    #[test]
    fn oracle_and_simulation_reject_mismatches() {
        let grid = ControlGrid::new(1.0, 10).unwrap();
        let short = HVector::new(vec![0.0; 9], grid.tau());
        assert!(matches!(
            simulate_forward(&lq_benchmark(), &short, grid),
            Err(Error::DimensionMismatch { .. })
        ));
        let wrong_horizon = ControlGrid::new(2.0, 10).unwrap();
        assert!(control_oracle(lq_benchmark(), wrong_horizon).is_err());
        let u = constant_control(grid, 0.0);
        let x = simulate_forward(&lq_benchmark(), &u, grid).unwrap();
        let fine = ControlGrid::new(1.0, 20).unwrap();
        let u_fine = constant_control(fine, 0.0);
        assert!(matches!(
            simulate_adjoint(&lq_benchmark(), &u_fine, &x, fine, AdjointScheme::DiscreteExact),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn discrete_objective_is_midpoint_convex(
            seed1 in 0u64..1000,
            seed2 in 0u64..1000,
        ) {
            let grid = ControlGrid::new(1.0, 8).unwrap();
            let oracle = control_oracle(lq_benchmark(), grid).unwrap();
            let u1 = oracle.space().random(seed1.wrapping_mul(0x9E37_79B9));
            let u2 = oracle.space().random(seed2.wrapping_mul(0x517C_C1B7).wrapping_add(1));
            let mid = HVector::lincomb(0.5, &u1, 0.5, &u2);
            let lhs = oracle.value(&mid);
            let rhs = 0.5 * oracle.value(&u1) + 0.5 * oracle.value(&u2);
            prop_assert!(lhs <= rhs + 1e-12 * (1.0 + rhs.abs()));
        }
    }
}
