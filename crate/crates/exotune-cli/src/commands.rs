//! Subcommand implementations, shared by the binary and the integration
//! tests.

use crate::config::{load_config, load_evaluation_config, RunConfig};
use crate::csvio::{read_trajectory, write_trajectory};
use crate::parallel::ParallelEvaluator;
use crate::report::{to_json_pretty, EvaluateReport, TuneOutcome, TuneReport};
use crate::CliError;
use exotune_core::controller::ControllerGains;
use exotune_core::eval::{fitness_se, step_constraints, ReferenceKind, StepResponseProblem};
use exotune_core::pso::{optimize, EvaluatorError, PsoError};
use exotune_core::sim::{simulate, SimError};
use std::fs;
use std::path::Path;

fn problem_from(config: &RunConfig) -> StepResponseProblem {
    StepResponseProblem {
        plant: config.plant,
        reference: config.reference,
        sim: config.sim,
        constraints: config.constraints,
    }
}

fn require_step_reference(config: &RunConfig) -> Result<(), CliError> {
    if config.reference.kind != ReferenceKind::Step {
        return Err(CliError::Input(String::from(
            "reference.kind: step-response scoring requires a step reference",
        )));
    }
    Ok(())
}

fn sim_error_to_cli(e: SimError) -> CliError {
    match e {
        SimError::NonFinite { t_last_good } => CliError::Divergence(format!(
            "simulation diverged to a non-finite state; last finite sample at t = {t_last_good} s"
        )),
        SimError::InvalidConfig(p) => CliError::Input(p.to_string()),
    }
}

fn evaluator_error_to_cli(e: EvaluatorError) -> CliError {
    match e {
        EvaluatorError::Sim(s) => sim_error_to_cli(s),
        EvaluatorError::Eval(v) => CliError::Input(v.to_string()),
        EvaluatorError::Message(m) => CliError::Input(m),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Run the swarm search. Writes the JSON report to `out_path` and the
/// winning trajectory to the same path with a `.csv` extension; both are
/// written even when no feasible candidate was found (the caller then exits
/// with the no-feasible code).
pub fn cmd_tune(config_path: &Path, out_path: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut config = load_config(config_path)?;
    require_step_reference(&config)?;
    if let Some(seed) = seed {
        config.pso.seed = seed;
    }

    let problem = problem_from(&config);
    let result = optimize(&config.pso.to_core(), &ParallelEvaluator(problem.clone())).map_err(
        |e| match e {
            PsoError::Evaluator {
                generation,
                particle,
                source: EvaluatorError::Sim(SimError::NonFinite { t_last_good }),
            } => CliError::Divergence(format!(
                "candidate at generation {generation}, particle {particle} diverged; \
                 last finite sample at t = {t_last_good} s"
            )),
            other => CliError::Input(other.to_string()),
        },
    )?;

    let report = TuneReport { config, result: TuneOutcome::from_result(&result) };
    write_text(out_path, &to_json_pretty(&report))?;

    // Re-run the winner (bit-identical to its in-search evaluation) so the
    // full trajectory ships next to the report.
    let gains = ControllerGains::from_array(result.best_position);
    let (log, _) = problem.run(&gains).map_err(evaluator_error_to_cli)?;
    let csv_path = out_path.with_extension("csv");
    write_trajectory(&csv_path, &log)?;

    println!(
        "{}: best fitness = {:.6e}, total violation = {:.3e}; report {}, trajectory {}",
        if result.feasible { "feasible" } else { "no feasible candidate" },
        result.best_fitness,
        result.best_violation,
        out_path.display(),
        csv_path.display(),
    );
    if !result.feasible {
        return Err(CliError::NoFeasible);
    }
    Ok(())
}

/// Integrate the closed loop with the configured gains and write the
/// trajectory CSV.
pub fn cmd_simulate(config_path: &Path, out_path: &Path) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    let gains = config.gains.ok_or_else(|| {
        CliError::Input(String::from(
            "gains: required by simulate (add the six controller gains to the config)",
        ))
    })?;
    let log =
        simulate(&config.plant, &gains, &config.reference, &config.sim).map_err(sim_error_to_cli)?;
    write_trajectory(out_path, &log)?;
    println!(
        "wrote {} samples ({} s at dt = {} s) to {}",
        log.rows.len(),
        config.sim.t_final,
        config.sim.dt,
        out_path.display()
    );
    Ok(())
}

/// Score a trajectory CSV against the step-response constraints and print
/// the result (fitness, constraint vector, feasibility) as JSON on stdout.
pub fn cmd_evaluate(traj_path: &Path, constraints_path: &Path) -> Result<(), CliError> {
    let spec = load_evaluation_config(constraints_path)?;
    let log = read_trajectory(traj_path)?;
    let located = |e: exotune_core::eval::EvalError| {
        CliError::Input(format!("{}: {e}", traj_path.display()))
    };
    let fitness = fitness_se(&log).map_err(located)?;
    let constraints = step_constraints(&log, &spec.constraints, &spec.reference).map_err(located)?;
    let report = EvaluateReport { fitness, constraints, feasible: constraints.is_feasible() };
    print!("{}", to_json_pretty(&report));
    Ok(())
}
