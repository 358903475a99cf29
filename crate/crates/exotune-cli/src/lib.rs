//! Command-line front-end for the `exotune-core` toolkit.
//!
//! Three subcommands share one JSON configuration schema: `simulate`
//! integrates the closed loop and writes a trajectory CSV, `evaluate` scores
//! a trajectory CSV against the step-response constraints, and `tune` runs
//! the constrained particle swarm and writes a JSON report plus the winning
//! trajectory. Everything is deterministic: the same configuration and seed
//! reproduce output files byte for byte, regardless of thread count.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod parallel;
pub mod report;

use std::fmt;

/// Command failure, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid input: configuration, trajectory, or arguments
    /// (exit 1).
    Input(String),
    /// The search finished cleanly but no candidate satisfied the
    /// constraints; report and trajectory are still written (exit 2).
    NoFeasible,
    /// The closed loop left the representable number range (exit 3).
    Divergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 1,
            Self::NoFeasible => 2,
            Self::Divergence(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(msg) => write!(f, "{msg}"),
            Self::NoFeasible => write!(
                f,
                "search completed without a feasible candidate (report and trajectory were still written)"
            ),
            Self::Divergence(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}
