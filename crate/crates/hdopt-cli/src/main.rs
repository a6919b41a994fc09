//! `hdopt` — experiment harness for the solver library.
//!
//! ```text
//! hdopt run <config.json> [--output PATH] [--seed N] [--steps N] [--eps X]
//! hdopt compare <config.json>... [--output PATH] [--seed N]
//! ```
//!
//! `run` executes one configured solve, writes the per-iteration CSV to the
//! configured (or overridden) output path, and prints a one-line JSON
//! summary to standard output. Exit status: 0 when the run converged, 2
//! when it stopped on its budget (the partial CSV is still written), 1 on
//! configuration or input errors.
//!
//! `compare` executes several configurations of the same problem and writes
//! a wide CSV with a footer row of fitted convergence exponents.
//!
//! Set `HD_LOG_LEVEL` to `quiet` (default), `info`, or `debug` to control
//! diagnostics on standard error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hdopt_cli::config::{CliError, RunConfig};
use hdopt_cli::runner::{execute, SolutionFormat};
use hdopt_cli::{compare, csvio};

#[derive(Parser)]
#[command(name = "hdopt", about = "Run and compare first-order solver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one configured solve and emit its iteration log.
    Run {
        /// JSON run configuration.
        config: PathBuf,
        /// Override the config's `output_path`.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's `steps` (control problems).
        #[arg(long)]
        steps: Option<usize>,
        /// Override the method's accuracy target.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Run several configs of the same problem and tabulate them.
    Compare {
        /// Two or more JSON run configurations.
        configs: Vec<PathBuf>,
        /// Where to write the comparison table.
        #[arg(long, default_value = "compare.csv")]
        output: PathBuf,
        /// Override every member's `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn init_logging() -> Result<(), String> {
    let level = match std::env::var("HD_LOG_LEVEL") {
        Ok(value) => match value.as_str() {
            "quiet" => log::LevelFilter::Off,
            "info" => log::LevelFilter::Info,
            "debug" => log::LevelFilter::Debug,
            other => {
                return Err(format!(
                    "HD_LOG_LEVEL must be quiet, info, or debug; got {other:?}"
                ));
            }
        },
        Err(_) => log::LevelFilter::Off,
    };
    env_logger::Builder::new().filter_level(level).try_init().ok();
    Ok(())
}

fn main() -> ExitCode {
    if let Err(message) = init_logging() {
        eprintln!("config error: {message}");
        return ExitCode::from(1);
    }
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, output, seed, steps, eps } => {
            run_command(&config, output, seed, steps, eps)
        }
        Command::Compare { configs, output, seed } => compare_command(&configs, &output, seed),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(1)
        }
    }
}

fn run_command(
    config_path: &Path,
    output: Option<PathBuf>,
    seed: Option<u64>,
    steps: Option<usize>,
    eps: Option<f64>,
) -> Result<ExitCode, CliError> {
    let mut config = RunConfig::load_unvalidated(config_path)?;
    if let Some(path) = output {
        config.output_path = Some(path.display().to_string());
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(steps) = steps {
        config.steps = Some(steps);
    }
    if let Some(eps) = eps {
        config.method.set_eps(eps);
    }
    config.validate()?;

    let outcome = execute(&config)?;
    // The log is written before the exit status is decided, so budget-capped
    // runs still leave their partial CSV behind.
    if let Some(path) = &config.output_path {
        csvio::write_runlog(Path::new(path), &outcome.log)?;
    }
    if let Some(path) = &config.solution_path {
        match outcome.format {
            SolutionFormat::Boundary => csvio::write_boundary(Path::new(path), &outcome.solution)?,
            SolutionFormat::Control => csvio::write_control(Path::new(path), &outcome.solution)?,
            SolutionFormat::Plain => {
                return Err(CliError::Config(
                    "field `solution_path`: this problem has no solution file schema".into(),
                ));
            }
        }
    }
    let summary = outcome.summary(config.output_path.as_deref());
    println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
    Ok(match outcome.log.status() {
        hdopt::solvers::TerminalStatus::Converged => ExitCode::SUCCESS,
        _ => ExitCode::from(2),
    })
}

fn compare_command(
    config_paths: &[PathBuf],
    output: &Path,
    seed: Option<u64>,
) -> Result<ExitCode, CliError> {
    if config_paths.len() < 2 {
        return Err(CliError::Config("compare needs at least two config files".into()));
    }
    let mut configs = Vec::with_capacity(config_paths.len());
    for path in config_paths {
        let mut config = RunConfig::load_unvalidated(path)?;
        if let Some(seed) = seed {
            config.seed = seed;
        }
        config.validate()?;
        configs.push(config);
    }
    let report = compare::compare(&configs, output)?;
    for (label, (value_fit, feas_fit)) in report.labels.iter().zip(&report.exponents) {
        log::info!(
            "member {label}: J exponent {value_fit:?}, feasibility exponent {feas_fit:?}"
        );
    }
    Ok(ExitCode::SUCCESS)
}
