use clap::{Parser, Subcommand};
use exotune_cli::commands::{cmd_evaluate, cmd_simulate, cmd_tune};
use std::path::PathBuf;
use std::process::exit;

/// Knee-exoskeleton controller toolkit: simulate the adaptive closed loop,
/// score step responses, and tune gains with a constrained particle swarm.
///
/// Exit codes: 0 success, 1 invalid input, 2 search found no feasible
/// candidate, 3 simulation diverged.
#[derive(Parser)]
#[command(name = "exotune", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for feasible, low-error controller gains; writes a JSON report
    /// and the winning trajectory CSV.
    Tune {
        /// Run configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Report path; the winning trajectory goes to the same path with a
        /// .csv extension.
        #[arg(long)]
        out: PathBuf,
        /// Override the seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Integrate the closed loop with the gains from the config and write
    /// the trajectory CSV.
    Simulate {
        /// Run configuration (JSON); must include a `gains` section.
        #[arg(long)]
        config: PathBuf,
        /// Trajectory CSV output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a trajectory CSV against step-response constraints and print
    /// `{fitness, constraints, feasible}` as JSON.
    Evaluate {
        /// Trajectory CSV produced by simulate or tune.
        #[arg(long)]
        traj: PathBuf,
        /// Scoring settings (JSON: reference, optional constraint bands).
        #[arg(long)]
        constraints: PathBuf,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage errors are invalid input (exit 1); --help and --version
            // are successful runs (exit 0).
            let code = i32::from(e.use_stderr());
            let _ = e.print();
            exit(code);
        }
    };
    let result = match cli.command {
        Command::Tune { config, out, seed } => cmd_tune(&config, &out, seed),
        Command::Simulate { config, out } => cmd_simulate(&config, &out),
        Command::Evaluate { traj, constraints } => cmd_evaluate(&traj, &constraints),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        exit(e.exit_code());
    }
}
