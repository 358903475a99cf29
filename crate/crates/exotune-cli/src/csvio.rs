//! Trajectory CSV format: write and strict parse.
//!
//! Floats are rendered with 17 significant digits (`{:.16e}`), which
//! round-trips every finite `f64` bit for bit — `evaluate` on an exported
//! file therefore reproduces in-process scores exactly, down to the last
//! serialized digit.

use crate::CliError;
use exotune_core::sim::{TrajectoryLog, TrajectoryRow};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Exact column contract. `violations` is the row's flag bitmask: bit 0 =
/// angle outside [−π/2, 0], bit 1 = speed above the envelope, bit 2 = torque
/// clamped at the sample, bit 3 = torque clamped inside the preceding
/// integration step.
pub const CSV_HEADER: &str =
    "t,theta,theta_dot,theta_d,theta_d_dot,torque,s,V,I_hat,C_s_hat,C_v_hat,Gamma_g_hat,violations";

const COLUMNS: usize = 13;

pub fn render_trajectory(log: &TrajectoryLog) -> String {
    let mut out = String::with_capacity(64 + log.rows.len() * 24 * COLUMNS);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &log.rows {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.t,
            r.theta,
            r.theta_dot,
            r.theta_d,
            r.theta_d_dot,
            r.torque,
            r.s,
            r.lyapunov,
            r.i_hat,
            r.c_s_hat,
            r.c_v_hat,
            r.gamma_g_hat,
            r.flags
        );
    }
    out
}

pub fn write_trajectory(path: &Path, log: &TrajectoryLog) -> Result<(), CliError> {
    fs::write(path, render_trajectory(log))
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Parse a trajectory CSV. Errors carry 1-based line numbers; the header is
/// line 1. The time column must form the uniform grid `t = k·dt` starting at
/// zero, and every value must be finite.
pub fn parse_trajectory(text: &str) -> Result<TrajectoryLog, String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first == CSV_HEADER => {}
        Some((_, first)) => {
            return Err(format!("line 1: expected header \"{CSV_HEADER}\", got \"{first}\""))
        }
        None => return Err(String::from("line 1: file is empty")),
    }

    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != COLUMNS {
            return Err(format!(
                "line {line_no}: expected {COLUMNS} comma-separated fields, got {}",
                fields.len()
            ));
        }
        let float = |col: usize| -> Result<f64, String> {
            let raw = fields[col].trim();
            let value: f64 = raw
                .parse()
                .map_err(|e| format!("line {line_no}, column {}: {e} (value \"{raw}\")", col + 1))?;
            if !value.is_finite() {
                return Err(format!(
                    "line {line_no}, column {}: non-finite value \"{raw}\"",
                    col + 1
                ));
            }
            Ok(value)
        };
        let flags: u8 = fields[COLUMNS - 1].trim().parse().map_err(|e| {
            format!("line {line_no}, column {COLUMNS}: {e} (value \"{}\")", fields[COLUMNS - 1].trim())
        })?;
        rows.push(TrajectoryRow {
            t: float(0)?,
            theta: float(1)?,
            theta_dot: float(2)?,
            theta_d: float(3)?,
            theta_d_dot: float(4)?,
            torque: float(5)?,
            s: float(6)?,
            lyapunov: float(7)?,
            i_hat: float(8)?,
            c_s_hat: float(9)?,
            c_v_hat: float(10)?,
            gamma_g_hat: float(11)?,
            flags,
        });
    }

    TrajectoryLog::from_rows(rows).map_err(|e| e.to_string())
}

pub fn read_trajectory(path: &Path) -> Result<TrajectoryLog, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_trajectory(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
