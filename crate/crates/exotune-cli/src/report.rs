//! JSON output documents. Serialization is deterministic: field order is
//! fixed by the struct definitions and floats use shortest-roundtrip
//! formatting, so identical runs produce byte-identical files.

use crate::config::RunConfig;
use exotune_core::controller::ControllerGains;
use exotune_core::eval::ConstraintVector;
use exotune_core::pso::{HistoryEntry, OptimizationResult};
use serde::{Deserialize, Serialize};

/// Outcome section of the tuning report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneOutcome {
    pub feasible: bool,
    pub best_gains: ControllerGains,
    pub best_fitness: f64,
    pub best_violation: f64,
    pub best_constraints: ConstraintVector,
    pub generations_run: usize,
    pub seed: u64,
    /// Global-best fitness and violation after each generation.
    pub history: Vec<HistoryEntry>,
}

impl TuneOutcome {
    pub fn from_result(result: &OptimizationResult) -> Self {
        Self {
            feasible: result.feasible,
            best_gains: ControllerGains::from_array(result.best_position),
            best_fitness: result.best_fitness,
            best_violation: result.best_violation,
            best_constraints: result.best_constraints,
            generations_run: result.generations_run,
            seed: result.seed,
            history: result.history.clone(),
        }
    }
}

/// Full tuning report: the effective configuration (seed override applied)
/// plus the outcome, so the file alone reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneReport {
    pub config: RunConfig,
    pub result: TuneOutcome,
}

/// Document printed to stdout by the `evaluate` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateReport {
    pub fitness: f64,
    pub constraints: ConstraintVector,
    pub feasible: bool,
}

/// Pretty JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut text =
        serde_json::to_string_pretty(value).expect("report types contain only serializable data");
    text.push('\n');
    text
}
