//! Side-by-side comparison of several methods on one problem.
//!
//! Members run concurrently (each is independently deterministic, so the
//! schedule cannot change any byte of the output); assembly is serialized
//! in input order. The table aligns the iteration-indexed objective and
//! feasibility columns of every member:
//!
//! ```text
//! k,stm_J,stm_feasibility,gd_averaged_J,gd_averaged_feasibility
//! 0,0.5,,0.5,
//! ...
//! exponent,-1.98,,-0.97,
//! ```
//!
//! The footer row holds the fitted convergence exponent of each column
//! (least-squares slope of `log` column vs `log k` over the final half of
//! the iterations); cells stay empty where a fit is impossible. A member
//! whose run fails contributes empty columns — the failure is logged, not
//! propagated.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::{CliError, RunConfig};
use crate::csvio::write_text;
use crate::fit::convergence_exponent;
use crate::runner::{execute, RunOutcome};

/// What `compare` learned about each member, in input order.
#[derive(Debug)]
pub struct CompareReport {
    pub labels: Vec<String>,
    /// Per member: fitted exponent of the objective column, then of the
    /// feasibility column.
    pub exponents: Vec<(Option<f64>, Option<f64>)>,
    /// Terminal status name per member; `None` for failed runs.
    pub statuses: Vec<Option<&'static str>>,
}

/// Runs every member configuration and writes the comparison table.
pub fn compare(configs: &[RunConfig], output: &Path) -> Result<CompareReport, CliError> {
    if configs.len() < 2 {
        return Err(CliError::Config("compare needs at least two configurations".into()));
    }
    let first = &configs[0];
    for member in &configs[1..] {
        if member.problem != first.problem
            || member.grid_n != first.grid_n
            || member.steps != first.steps
        {
            return Err(CliError::Config(
                "field `problem`: compare members must share one problem".into(),
            ));
        }
    }

    let results: Vec<Result<RunOutcome, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs.iter().map(|c| scope.spawn(move || execute(c))).collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|_| {
                    Err(CliError::Config("comparison worker panicked".into()))
                })
            })
            .collect()
    });
    for (config, result) in configs.iter().zip(&results) {
        if let Err(err) = result {
            log::warn!("member `{}` failed: {err}; columns stay empty", config.label());
        }
    }

    let labels = unique_labels(configs);
    let table = render_table(&labels, &results);
    write_text(output, &table.text)?;
    Ok(CompareReport {
        labels,
        exponents: table.exponents,
        statuses: results
            .iter()
            .map(|r| r.as_ref().ok().map(|o| crate::runner::status_name(o.log.status())))
            .collect(),
    })
}

/// Labels deduplicated in input order (`stm`, `stm_2`, `stm_3`, ...).
fn unique_labels(configs: &[RunConfig]) -> Vec<String> {
    let mut seen: Vec<String> = Vec::new();
    configs
        .iter()
        .map(|c| {
            let base = c.label();
            let copies = seen.iter().filter(|s| **s == base).count();
            seen.push(base.clone());
            if copies == 0 {
                base
            } else {
                format!("{base}_{}", copies + 1)
            }
        })
        .collect()
}

struct Table {
    text: String,
    exponents: Vec<(Option<f64>, Option<f64>)>,
}

fn render_table(labels: &[String], results: &[Result<RunOutcome, CliError>]) -> Table {
    let mut text = String::from("k");
    for label in labels {
        let _ = write!(text, ",{label}_J,{label}_feasibility");
    }
    text.push('\n');

    let depth = results
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .map(|o| o.log.rows().len())
        .max()
        .unwrap_or(0);
    for k in 0..depth {
        let _ = write!(text, "{k}");
        for result in results {
            match result.as_ref().ok().and_then(|o| o.log.rows().get(k)) {
                Some(row) => {
                    let _ = write!(text, ",{}", row.value);
                    match row.feasibility {
                        Some(feas) => {
                            let _ = write!(text, ",{feas}");
                        }
                        None => text.push(','),
                    }
                }
                None => text.push_str(",,"),
            }
        }
        text.push('\n');
    }

    let mut exponents = Vec::with_capacity(results.len());
    text.push_str("exponent");
    for result in results {
        let (value_fit, feas_fit) = match result {
            Ok(outcome) => {
                let values: Vec<(usize, f64)> =
                    outcome.log.rows().iter().map(|r| (r.k, r.value)).collect();
                let feas: Vec<(usize, f64)> = outcome
                    .log
                    .rows()
                    .iter()
                    .filter_map(|r| r.feasibility.map(|f| (r.k, f)))
                    .collect();
                (convergence_exponent(&values), convergence_exponent(&feas))
            }
            Err(_) => (None, None),
        };
        for fit in [value_fit, feas_fit] {
            match fit {
                Some(slope) => {
                    let _ = write!(text, ",{slope}");
                }
                None => text.push(','),
            }
        }
        exponents.push((value_fit, feas_fit));
    }
    text.push('\n');
    Table { text, exponents }
}
