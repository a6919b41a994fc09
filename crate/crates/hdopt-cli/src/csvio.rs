//! CSV serialization for iteration logs, boundary data, and controls.
//!
//! Three fixed schemas, all headered, all numeric, none quoted:
//!
//! - run log: `k,J,grad_norm,A_k,L_used,func_evals,grad_evals,feasibility,
//!   elapsed_ms` (feasibility empty for plain primal runs),
//! - boundary data: `y,value` at the interior nodes `y_j = (j+1) h`,
//! - control: `t,u` at the left endpoints `t_k = k tau`.
//!
//! Floats are written in Rust's shortest round-trip form, so parsing an
//! emitted file reproduces the in-memory values bit for bit, and a fixed
//! log always serializes to the same bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hdopt::hilbert::HVector;
use hdopt::solvers::{LogRow, RunLog};

use crate::config::CliError;

pub const RUNLOG_HEADER: &str =
    "k,J,grad_norm,A_k,L_used,func_evals,grad_evals,feasibility,elapsed_ms";

/// Renders a run log to CSV text.
pub fn runlog_to_csv(log: &RunLog) -> String {
    let mut out = String::with_capacity(64 * (log.rows().len() + 1));
    out.push_str(RUNLOG_HEADER);
    out.push('\n');
    for row in log.rows() {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},",
            row.k, row.value, row.grad_norm, row.a_k, row.l_used, row.func_evals, row.grad_evals
        );
        if let Some(feas) = row.feasibility {
            let _ = write!(out, "{feas}");
        }
        let _ = writeln!(out, ",{}", row.elapsed_ms);
    }
    out
}

pub fn write_runlog(path: &Path, log: &RunLog) -> Result<(), CliError> {
    write_text(path, &runlog_to_csv(log))
}

/// Parses run-log CSV text back into its rows.
pub fn parse_runlog(text: &str) -> Result<Vec<LogRow>, CliError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == RUNLOG_HEADER => {}
        other => {
            return Err(CliError::Config(format!(
                "run-log header mismatch: got {other:?}"
            )));
        }
    }
    let mut rows = Vec::new();
    for (index, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(CliError::Config(format!(
                "run-log line {}: expected 9 fields, got {}",
                index + 2,
                fields.len()
            )));
        }
        let num = |i: usize| -> Result<f64, CliError> {
            fields[i].parse().map_err(|_| {
                CliError::Config(format!("run-log line {}: bad number {:?}", index + 2, fields[i]))
            })
        };
        let int = |i: usize| -> Result<u64, CliError> {
            fields[i].parse().map_err(|_| {
                CliError::Config(format!("run-log line {}: bad count {:?}", index + 2, fields[i]))
            })
        };
        rows.push(LogRow {
            k: int(0)? as usize,
            value: num(1)?,
            grad_norm: num(2)?,
            a_k: num(3)?,
            l_used: num(4)?,
            func_evals: int(5)?,
            grad_evals: int(6)?,
            feasibility: if fields[7].is_empty() { None } else { Some(num(7)?) },
            elapsed_ms: num(8)?,
        });
    }
    Ok(rows)
}

pub fn read_runlog(path: &Path) -> Result<Vec<LogRow>, CliError> {
    parse_runlog(&read_text(path)?)
}

/// Renders interior-node wall data (`y_j = (j+1) h`, `h` the vector's
/// quadrature weight) to boundary CSV.
pub fn boundary_to_csv(q: &HVector) -> String {
    let h = q.weight();
    let mut out = String::from("y,value\n");
    for (j, value) in q.as_slice().iter().enumerate() {
        let _ = writeln!(out, "{},{}", (j + 1) as f64 * h, value);
    }
    out
}

pub fn write_boundary(path: &Path, q: &HVector) -> Result<(), CliError> {
    write_text(path, &boundary_to_csv(q))
}

/// Parses boundary CSV into wall data, recovering the grid spacing from the
/// node count and checking that the `y` column actually lies on that grid.
pub fn parse_boundary(text: &str) -> Result<HVector, CliError> {
    let mut lines = text.lines();
    match lines.next() {
        Some("y,value") => {}
        other => {
            return Err(CliError::Config(format!("boundary header mismatch: got {other:?}")));
        }
    }
    let mut pairs = Vec::new();
    for (index, line) in lines.enumerate() {
        let (y, value) = line.split_once(',').ok_or_else(|| {
            CliError::Config(format!("boundary line {}: expected y,value", index + 2))
        })?;
        let parse = |s: &str| -> Result<f64, CliError> {
            s.parse().map_err(|_| {
                CliError::Config(format!("boundary line {}: bad number {s:?}", index + 2))
            })
        };
        pairs.push((parse(y)?, parse(value)?));
    }
    if pairs.is_empty() {
        return Err(CliError::Config("boundary file has no data rows".into()));
    }
    let h = 1.0 / (pairs.len() + 1) as f64;
    for (j, &(y, _)) in pairs.iter().enumerate() {
        let expected = (j + 1) as f64 * h;
        if (y - expected).abs() > 1e-9 {
            return Err(CliError::Config(format!(
                "boundary row {}: y = {y} is not interior node {expected} of a uniform grid",
                j + 2
            )));
        }
    }
    Ok(HVector::new(pairs.into_iter().map(|(_, v)| v).collect(), h))
}

pub fn read_boundary(path: &Path) -> Result<HVector, CliError> {
    parse_boundary(&read_text(path)?)
}

/// Renders a scalar control sequence (`t_k = k tau`, `tau` the vector's
/// quadrature weight) to control CSV.
pub fn control_to_csv(u: &HVector) -> String {
    let tau = u.weight();
    let mut out = String::from("t,u\n");
    for (k, value) in u.as_slice().iter().enumerate() {
        let _ = writeln!(out, "{},{}", k as f64 * tau, value);
    }
    out
}

pub fn write_control(path: &Path, u: &HVector) -> Result<(), CliError> {
    write_text(path, &control_to_csv(u))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hdopt::solvers::TerminalStatus;

    fn sample_log() -> RunLog {
        let mut log = RunLog::new();
        for k in 0..5u64 {
            log.push(LogRow {
                k: k as usize,
                value: 1.0 / (k + 1) as f64,
                grad_norm: 0.3 * (k as f64 + 0.25),
                a_k: k as f64 * 0.5,
                l_used: 4.0,
                func_evals: 2 * k + 1,
                grad_evals: k + 1,
                feasibility: (k % 2 == 0).then(|| 1e-3 / (k + 1) as f64),
                elapsed_ms: 0.0,
            });
        }
        log.set_status(TerminalStatus::Converged);
        log
    }

    #[test]
    fn runlog_round_trips_exactly() {
        let log = sample_log();
        let text = runlog_to_csv(&log);
        assert!(text.starts_with(RUNLOG_HEADER));
        let rows = parse_runlog(&text).unwrap();
        assert_eq!(rows, log.rows());
        // Re-serialization is byte-identical: shortest-form floats are
        // canonical.
        let mut log2 = RunLog::new();
        for row in rows {
            log2.push(row);
        }
        assert_eq!(runlog_to_csv(&log2), text);
    }

    #[test]
    fn runlog_survives_awkward_floats() {
        let mut log = RunLog::new();
        log.push(LogRow {
            k: 0,
            value: 0.1 + 0.2,
            grad_norm: f64::MIN_POSITIVE,
            a_k: 1.0 / 3.0,
            l_used: 1e308,
            func_evals: u64::MAX,
            grad_evals: 0,
            feasibility: Some(5e-324),
            elapsed_ms: 0.0,
        });
        let rows = parse_runlog(&runlog_to_csv(&log)).unwrap();
        assert_eq!(rows, log.rows());
    }

    #[test]
    fn malformed_runlog_lines_are_rejected() {
        assert!(parse_runlog("wrong,header\n").is_err());
        let text = format!("{RUNLOG_HEADER}\n0,1.0,2.0\n");
        assert!(parse_runlog(&text).is_err());
        let text = format!("{RUNLOG_HEADER}\n0,x,0,0,0,0,0,,0\n");
        assert!(parse_runlog(&text).is_err());
    }

    #[test]
    fn boundary_round_trips_on_the_grid() {
        let q = HVector::new(vec![0.25, -1.5, 3.0], 0.25);
        let text = boundary_to_csv(&q);
        assert_eq!(text.lines().next(), Some("y,value"));
        let back = parse_boundary(&text).unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn boundary_rejects_off_grid_nodes() {
        let text = "y,value\n0.3,1.0\n0.5,2.0\n0.75,3.0\n";
        assert!(parse_boundary(text).is_err());
        assert!(parse_boundary("y,value\n").is_err());
    }

    #[test]
    fn control_csv_lists_left_endpoints() {
        let u = HVector::new(vec![0.5, 0.5, 0.5, 0.5], 0.25);
        let text = control_to_csv(&u);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,u");
        assert_eq!(lines[1], "0,0.5");
        assert_eq!(lines[4], "0.75,0.5");
    }
}
