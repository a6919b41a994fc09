//! JSON run configurations and their validation.
//!
//! A configuration is a single versioned JSON document:
//!
//! ```json
//! {
//!   "version": 1,
//!   "problem": { "kind": "quadratic", "diagonal": [1.0, 2.0] },
//!   "method":  { "kind": "stm", "eps": 1e-6, "max_iter": 500 },
//!   "seed": 7,
//!   "output_path": "runlog.csv"
//! }
//! ```
//!
//! Unknown fields are rejected so that typos fail loudly, and every
//! validation error names the offending field. Problem kinds:
//!
//! - `quadratic` — least squares with a diagonal operator; the data is the
//!   operator applied to the all-ones vector, so the optimum is known.
//! - `pde_inverse` — recover Dirichlet wall data of the elliptic
//!   continuation benchmark from its trace, either by primal least squares
//!   or through the minimum-norm dual (needs top-level `grid_n`). Noisy
//!   traces should use the primal approach (discrepancy-based early
//!   stopping via `eps` = noise²/2) or the regularized dual
//!   (`dual_regularized`); the plain dual assumes data in the operator's
//!   range and stalls on noise.
//! - `control_lq` — the linear-quadratic optimal-control benchmark (needs
//!   top-level `steps`); `eps` is the allowed excess over the benchmark's
//!   known optimal value.
//! - `dual_min_norm` — minimum-norm interpolation of explicit data under an
//!   explicit linear operator, solved through the dual with primal
//!   recovery.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::Deserialize;

/// Harness error: configuration problems exit 1; solver-side run failures
/// carry their own terminal status and are not errors.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or input file; the message names the offending
    /// field or path.
    Config(String),
    /// Filesystem failure while reading inputs or writing outputs.
    Io(String),
    /// The solver rejected the assembled problem (dimension mismatches,
    /// invalid parameters); treated as a configuration error.
    Solver(hdopt::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
            CliError::Solver(err) => write!(f, "solver error: {err}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<hdopt::Error> for CliError {
    fn from(err: hdopt::Error) -> Self {
        CliError::Solver(err)
    }
}

fn config_err(field: &str, message: &str) -> CliError {
    CliError::Config(format!("field `{field}`: {message}"))
}

/// One experiment: a problem, a method, and run parameters.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Schema version; must be 1.
    pub version: u32,
    pub problem: ProblemConfig,
    pub method: MethodConfig,
    /// Interior grid size for `pde_inverse`.
    #[serde(default)]
    pub grid_n: Option<usize>,
    /// Euler step count for `control_lq`.
    #[serde(default)]
    pub steps: Option<usize>,
    /// Oracle perturbation level (quadratic and control problems); requires
    /// `diameter`.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Ball diameter on which the perturbation stays valid.
    #[serde(default)]
    pub diameter: Option<f64>,
    /// Seed for every random choice in the run (data noise, perturbation
    /// streams). Same config + same seed = same output bytes.
    #[serde(default)]
    pub seed: u64,
    /// Where to write the per-iteration CSV; omit to skip the log file.
    #[serde(default)]
    pub output_path: Option<String>,
    /// Where to write the recovered solution (boundary or control CSV);
    /// only meaningful for `pde_inverse` and `control_lq`.
    #[serde(default)]
    pub solution_path: Option<String>,
    /// Column label in comparison tables; defaults to the method kind.
    #[serde(default)]
    pub label: Option<String>,
}

/// Problem selection plus problem-specific parameters.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// `J(q) = 1/2 ||D q - f||^2` with `D = diag(entries)` and `f = D 1`,
    /// so `q* = 1` and `J* = 0`.
    Quadratic { diagonal: Vec<f64> },
    /// Trace inversion for the elliptic continuation benchmark. Wall data
    /// comes from `modes` (synthesized exactly through the discrete
    /// operator) or a boundary CSV at `data_path`; `noise` adds a
    /// deterministic seed-driven perturbation of that Euclidean norm to the
    /// trace.
    PdeInverse {
        approach: ApproachConfig,
        #[serde(default)]
        modes: Vec<ModeConfig>,
        #[serde(default)]
        data_path: Option<String>,
        #[serde(default)]
        noise: Option<f64>,
        /// Use the power-method estimate of `||A||^2` instead of the safe
        /// bound 1 for primal step sizes.
        #[serde(default)]
        sharp_constant: bool,
        /// Primal-norm guess for the regularized dual approach.
        #[serde(default)]
        r_guess: Option<f64>,
    },
    /// Optimal-control benchmark: plain integrator (`x' = u`) or the damped
    /// variant (`x' = -x + u`), both on `[0, 1]` with known optima.
    ControlLq {
        #[serde(default)]
        damped: bool,
    },
    /// `min 1/2 ||q||^2` subject to `A q = data` for an explicit operator,
    /// via the dual with primal recovery.
    DualMinNorm { operator: OperatorConfig, data: Vec<f64> },
}

impl ProblemConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ProblemConfig::Quadratic { .. } => "quadratic",
            ProblemConfig::PdeInverse { .. } => "pde_inverse",
            ProblemConfig::ControlLq { .. } => "control_lq",
            ProblemConfig::DualMinNorm { .. } => "dual_min_norm",
        }
    }
}

/// Formulation for `pde_inverse`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproachConfig {
    PrimalLeastSquares,
    DualMinNorm,
    /// Strongly convex regularization of the dual; tolerant of data slightly
    /// outside the operator's range.
    DualRegularized,
}

/// One Fourier mode of synthesized wall data: `amplitude * sin(k pi y)`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub k: usize,
    pub amplitude: f64,
}

/// Explicit linear operator for `dual_min_norm` (unit quadrature weights).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    Diagonal { entries: Vec<f64> },
    Dense { rows: usize, cols: usize, entries: Vec<f64> },
}

/// Method selection plus method parameters. `eps` is the accuracy target
/// (objective value for primal runs, duality gap for dual runs); `max_iter`
/// caps outer iterations (segments for `rstm`).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodConfig {
    /// Accelerated method at a trusted constant. `l` defaults to the
    /// problem's exact constant where one is known (quadratic, control).
    Stm {
        #[serde(default)]
        l: Option<f64>,
        #[serde(default)]
        mu: f64,
        eps: f64,
        #[serde(default)]
        eps_tilde: Option<f64>,
        max_iter: usize,
    },
    /// Backtracking accelerated method; no constant required.
    Astm {
        #[serde(default)]
        mu: f64,
        eps: f64,
        #[serde(default)]
        eps_tilde: Option<f64>,
        max_iter: usize,
    },
    /// Gradient descent reporting the last iterate; `l` absent means
    /// backtracking.
    Gd {
        #[serde(default)]
        l: Option<f64>,
        eps: f64,
        max_iter: usize,
    },
    /// Gradient descent reporting the running average of its trajectory.
    GdAveraged {
        #[serde(default)]
        l: Option<f64>,
        eps: f64,
        #[serde(default)]
        eps_tilde: Option<f64>,
        max_iter: usize,
    },
    /// Restarted accelerated method with halving strong-convexity guesses;
    /// `l` absent means backtracking segments, `max_iter` counts segments.
    Rstm {
        #[serde(default)]
        l: Option<f64>,
        mu0: f64,
        eps: f64,
        max_iter: usize,
    },
}

impl MethodConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            MethodConfig::Stm { .. } => "stm",
            MethodConfig::Astm { .. } => "astm",
            MethodConfig::Gd { .. } => "gd",
            MethodConfig::GdAveraged { .. } => "gd_averaged",
            MethodConfig::Rstm { .. } => "rstm",
        }
    }

    pub fn eps(&self) -> f64 {
        match *self {
            MethodConfig::Stm { eps, .. }
            | MethodConfig::Astm { eps, .. }
            | MethodConfig::Gd { eps, .. }
            | MethodConfig::GdAveraged { eps, .. }
            | MethodConfig::Rstm { eps, .. } => eps,
        }
    }

    pub fn set_eps(&mut self, value: f64) {
        match self {
            MethodConfig::Stm { eps, .. }
            | MethodConfig::Astm { eps, .. }
            | MethodConfig::Gd { eps, .. }
            | MethodConfig::GdAveraged { eps, .. }
            | MethodConfig::Rstm { eps, .. } => *eps = value,
        }
    }

    pub fn max_iter(&self) -> usize {
        match *self {
            MethodConfig::Stm { max_iter, .. }
            | MethodConfig::Astm { max_iter, .. }
            | MethodConfig::Gd { max_iter, .. }
            | MethodConfig::GdAveraged { max_iter, .. }
            | MethodConfig::Rstm { max_iter, .. } => max_iter,
        }
    }

    pub(crate) fn l(&self) -> Option<f64> {
        match *self {
            MethodConfig::Stm { l, .. }
            | MethodConfig::Gd { l, .. }
            | MethodConfig::GdAveraged { l, .. }
            | MethodConfig::Rstm { l, .. } => l,
            MethodConfig::Astm { .. } => None,
        }
    }

    pub(crate) fn eps_tilde(&self) -> Option<f64> {
        match *self {
            MethodConfig::Stm { eps_tilde, .. }
            | MethodConfig::Astm { eps_tilde, .. }
            | MethodConfig::GdAveraged { eps_tilde, .. } => eps_tilde,
            MethodConfig::Gd { .. } | MethodConfig::Rstm { .. } => None,
        }
    }
}

impl RunConfig {
    /// Parses and validates a configuration from a JSON file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_json(&Self::slurp(path)?)
    }

    /// Parses a JSON file without validating, so the command line can apply
    /// flag overrides before the single validation pass.
    pub fn load_unvalidated(path: &Path) -> Result<Self, CliError> {
        serde_json::from_str(&Self::slurp(path)?).map_err(|e| CliError::Config(e.to_string()))
    }

    fn slurp(path: &Path) -> Result<String, CliError> {
        fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))
    }

    /// Parses and validates a configuration from JSON text.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Column label for comparison tables.
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.method.kind().to_owned())
    }

    /// Cross-field validation; every rejection names the offending field.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != 1 {
            return Err(config_err("version", "only schema version 1 is supported"));
        }
        let eps = self.method.eps();
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(config_err("eps", "must be positive and finite"));
        }
        if self.method.max_iter() == 0 {
            return Err(config_err("max_iter", "must be at least 1"));
        }
        if let Some(l) = self.method.l() {
            if !(l > 0.0 && l.is_finite()) {
                return Err(config_err("l", "must be positive and finite"));
            }
        }
        if let MethodConfig::Rstm { mu0, .. } = self.method {
            if !(mu0 > 0.0 && mu0.is_finite()) {
                return Err(config_err("mu0", "must be positive and finite"));
            }
        }
        match (self.delta, self.diameter) {
            (Some(d), _) if !(d >= 0.0 && d.is_finite()) => {
                return Err(config_err("delta", "must be nonnegative and finite"));
            }
            (Some(_), None) => {
                return Err(config_err("diameter", "required when `delta` is set"));
            }
            (_, Some(r)) if !(r > 0.0 && r.is_finite()) => {
                return Err(config_err("diameter", "must be positive and finite"));
            }
            _ => {}
        }

        match &self.problem {
            ProblemConfig::Quadratic { diagonal } => {
                if diagonal.is_empty() {
                    return Err(config_err("diagonal", "must not be empty"));
                }
                if !diagonal.iter().all(|d| d.is_finite() && *d != 0.0) {
                    return Err(config_err("diagonal", "entries must be finite and nonzero"));
                }
                self.reject_grid_fields()?;
            }
            ProblemConfig::PdeInverse {
                approach,
                modes,
                data_path,
                noise,
                r_guess,
                sharp_constant,
            } => {
                let n = self
                    .grid_n
                    .ok_or_else(|| config_err("grid_n", "required for pde_inverse"))?;
                if n < 3 {
                    return Err(config_err("grid_n", "need at least 3 interior points"));
                }
                if self.steps.is_some() {
                    return Err(config_err("steps", "not used by pde_inverse"));
                }
                match (modes.is_empty(), data_path.is_some()) {
                    (true, false) => {
                        return Err(config_err("modes", "give modes or a data_path"));
                    }
                    (false, true) => {
                        return Err(config_err(
                            "data_path",
                            "give either modes or a data_path, not both",
                        ));
                    }
                    _ => {}
                }
                for mode in modes {
                    if mode.k == 0 || mode.k > n {
                        return Err(config_err("modes", "mode index must lie in 1..=grid_n"));
                    }
                    if !mode.amplitude.is_finite() {
                        return Err(config_err("modes", "amplitude must be finite"));
                    }
                }
                if let Some(sigma) = noise {
                    if !(*sigma >= 0.0 && sigma.is_finite()) {
                        return Err(config_err("noise", "must be nonnegative and finite"));
                    }
                }
                if let Some(r) = r_guess {
                    if *approach != ApproachConfig::DualRegularized {
                        return Err(config_err(
                            "r_guess",
                            "only used by the dual_regularized approach",
                        ));
                    }
                    if !(*r > 0.0 && r.is_finite()) {
                        return Err(config_err("r_guess", "must be positive and finite"));
                    }
                }
                if self.method.l().is_some() {
                    return Err(config_err(
                        "l",
                        "pde_inverse chooses its own constant; use sharp_constant instead",
                    ));
                }
                if matches!(self.method, MethodConfig::Rstm { .. }) {
                    return Err(config_err("method", "rstm is not wired to pde_inverse"));
                }
                if *approach != ApproachConfig::PrimalLeastSquares {
                    if matches!(self.method, MethodConfig::Gd { .. }) {
                        return Err(config_err(
                            "method",
                            "plain gd carries no averaged dual certificate; use gd_averaged",
                        ));
                    }
                    if *sharp_constant {
                        return Err(config_err(
                            "sharp_constant",
                            "the dual approaches always use the estimated constant",
                        ));
                    }
                } else if self.method.eps_tilde().is_some() {
                    return Err(config_err(
                        "eps_tilde",
                        "the primal approach stops on the objective alone; use eps",
                    ));
                }
                self.reject_perturbation("pde_inverse")?;
            }
            ProblemConfig::ControlLq { .. } => {
                let steps =
                    self.steps.ok_or_else(|| config_err("steps", "required for control_lq"))?;
                if steps == 0 {
                    return Err(config_err("steps", "must be at least 1"));
                }
                if self.grid_n.is_some() {
                    return Err(config_err("grid_n", "not used by control_lq"));
                }
            }
            ProblemConfig::DualMinNorm { operator, data } => {
                let (rows, cols) = match operator {
                    OperatorConfig::Diagonal { entries } => {
                        if entries.is_empty() {
                            return Err(config_err("entries", "must not be empty"));
                        }
                        if !entries.iter().all(|d| d.is_finite()) {
                            return Err(config_err("entries", "must be finite"));
                        }
                        (entries.len(), entries.len())
                    }
                    OperatorConfig::Dense { rows, cols, entries } => {
                        if *rows == 0 || *cols == 0 {
                            return Err(config_err("rows", "operator must be nonempty"));
                        }
                        if entries.len() != rows * cols {
                            return Err(config_err("entries", "need exactly rows*cols entries"));
                        }
                        if !entries.iter().all(|d| d.is_finite()) {
                            return Err(config_err("entries", "must be finite"));
                        }
                        (*rows, *cols)
                    }
                };
                let _ = cols;
                if data.len() != rows {
                    return Err(config_err("data", "length must match the operator's rows"));
                }
                if !data.iter().all(|d| d.is_finite()) {
                    return Err(config_err("data", "must be finite"));
                }
                match self.method {
                    MethodConfig::Gd { .. } => {
                        return Err(config_err(
                            "method",
                            "plain gd carries no averaged dual certificate; use gd_averaged",
                        ));
                    }
                    MethodConfig::Rstm { .. } => {
                        return Err(config_err("method", "rstm is not wired to dual_min_norm"));
                    }
                    _ => {}
                }
                if self.method.l().is_some() {
                    return Err(config_err(
                        "l",
                        "dual runs estimate their own constant from the operator",
                    ));
                }
                self.reject_grid_fields()?;
                self.reject_perturbation("dual_min_norm")?;
            }
        }

        if self.method.eps_tilde().is_some()
            && !matches!(
                self.problem,
                ProblemConfig::DualMinNorm { .. } | ProblemConfig::PdeInverse { .. }
            )
        {
            return Err(config_err("eps_tilde", "only dual runs take a feasibility target"));
        }
        if let Some(tilde) = self.method.eps_tilde() {
            if !(tilde > 0.0 && tilde.is_finite()) {
                return Err(config_err("eps_tilde", "must be positive and finite"));
            }
        }
        if self.solution_path.is_some()
            && !matches!(
                self.problem,
                ProblemConfig::PdeInverse { .. } | ProblemConfig::ControlLq { .. }
            )
        {
            return Err(config_err(
                "solution_path",
                "solution files exist for pde_inverse (y,value) and control_lq (t,u) only",
            ));
        }
        Ok(())
    }

    fn reject_grid_fields(&self) -> Result<(), CliError> {
        if self.grid_n.is_some() {
            return Err(config_err("grid_n", "only used by pde_inverse"));
        }
        if self.steps.is_some() {
            return Err(config_err("steps", "only used by control_lq"));
        }
        Ok(())
    }

    fn reject_perturbation(&self, kind: &str) -> Result<(), CliError> {
        if self.delta.is_some() || self.diameter.is_some() {
            return Err(config_err(
                "delta",
                &format!("{kind} builds its oracle internally and cannot be perturbed"),
            ));
        }
        Ok(())
    }
}
