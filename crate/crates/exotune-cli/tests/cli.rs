//! End-to-end behavior of the `exotune` binary: exit codes, error message
//! quality, and output file contracts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use exotune_cli::csvio::{parse_trajectory, render_trajectory, CSV_HEADER};
use exotune_cli::report::TuneReport;
use exotune_core::sim::{TrajectoryLog, TrajectoryRow};

fn exotune() -> Command {
    Command::new(env!("CARGO_BIN_EXE_exotune"))
}

fn run(args: &[&str]) -> Output {
    exotune().args(args).output().expect("binary must spawn")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).expect("test file must write");
    path
}

const STEP_REFERENCE: &str =
    r#""reference": { "kind": "step", "theta_start": -1.0, "theta_target": -1.5 }"#;

fn gains_json() -> String {
    r#""gains": { "kappa": 6.3344, "gamma": 3.9287, "eta1": 15.0, "eta2": 14.8266, "eta3": 1.1692, "eta4": 1.0 }"#
        .to_string()
}

fn simulate_config() -> String {
    format!(
        r#"{{
  {STEP_REFERENCE},
  "sim": {{ "initial_state": {{ "theta": -1.0 }} }},
  {}
}}"#,
        gains_json()
    )
}

fn small_tune_config(seed: u64) -> String {
    format!(
        r#"{{
  {STEP_REFERENCE},
  "sim": {{ "initial_state": {{ "theta": -1.0 }} }},
  "pso": {{ "particles": 8, "generations": 6, "seed": {seed} }}
}}"#
    )
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).contains("tune"));
}

#[test]
fn unknown_subcommand_exits_one() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_config_file_exits_one() {
    let out = run(&["simulate", "--config", "/nonexistent/nope.json", "--out", "/tmp/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("nope.json"), "stderr: {}", stderr_of(&out));
}

#[test]
fn simulate_writes_exact_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "config.json", &simulate_config());
    let out_path = dir.path().join("run.csv");
    let out = run(&["simulate", "--config", config.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    let text = fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER, "header must match the contract exactly");
    assert_eq!(text.lines().count(), 3002, "header plus 3001 samples for 3 s at 1 ms");
    let log = parse_trajectory(&text).expect("own output must parse");
    assert_eq!(log.rows[0].t, 0.0);
    assert_eq!(log.rows[0].theta, -1.0);
    assert_eq!(log.rows.last().unwrap().t, 3.0);
}

#[test]
fn simulate_without_gains_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "config.json",
        &format!(r#"{{ {STEP_REFERENCE}, "sim": {{ "initial_state": {{ "theta": -1.0 }} }} }}"#),
    );
    let out = run(&["simulate", "--config", config.to_str().unwrap(), "--out", "/tmp/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("gains"), "stderr: {}", stderr_of(&out));
}

#[test]
fn unknown_config_field_exits_one_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "config.json",
        &format!(r#"{{ {STEP_REFERENCE}, "plant": {{ "inertia": 0.4, "lever_arm": 0.3 }} }}"#),
    );
    let out = run(&["simulate", "--config", config.to_str().unwrap(), "--out", "/tmp/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.contains("lever_arm") && err.contains("plant"), "stderr: {err}");
}

#[test]
fn inverted_bounds_exit_one_with_dotted_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "config.json",
        &format!(
            r#"{{ {STEP_REFERENCE}, "pso": {{ "bounds": {{ "kappa": {{ "min": 10.0, "max": 1.0 }} }} }} }}"#
        ),
    );
    let out = run(&["tune", "--config", config.to_str().unwrap(), "--out", "/tmp/x.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("pso.bounds.kappa.min"), "stderr: {}", stderr_of(&out));
}

#[test]
fn non_dividing_dt_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "config.json",
        &format!(r#"{{ {STEP_REFERENCE}, "sim": {{ "dt": 0.0007 }} }}"#),
    );
    let out = run(&["tune", "--config", config.to_str().unwrap(), "--out", "/tmp/x.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("sim.t_final"), "stderr: {}", stderr_of(&out));
}

#[test]
fn tune_on_constant_reference_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "config.json",
        r#"{ "reference": { "kind": "constant", "theta_start": -1.0 } }"#,
    );
    let out = run(&["tune", "--config", config.to_str().unwrap(), "--out", "/tmp/x.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("step reference"), "stderr: {}", stderr_of(&out));
}

#[test]
fn divergence_exits_three_with_last_good_time() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "config.json",
        r#"{
  "reference": { "kind": "step", "theta_start": -1.5707963267948966, "theta_target": -1.0 },
  "sim": { "dt": 0.2, "t_final": 60.0, "torque_limit": 1e300 },
  "gains": { "kappa": 10.0, "gamma": 5.0, "eta1": 5.0, "eta2": 5.0, "eta3": 5.0, "eta4": 5.0 }
}"#,
    );
    let out_path = dir.path().join("run.csv");
    let out = run(&["simulate", "--config", config.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_of(&out);
    assert!(err.contains("diverged") && err.contains("t = "), "stderr: {err}");
    assert!(!out_path.exists(), "no trajectory file on divergence");
}

#[test]
fn tune_seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config_a = write(dir.path(), "a.json", &small_tune_config(1));
    let config_b = write(dir.path(), "b.json", &small_tune_config(99));
    let out_a = dir.path().join("a.json.out");
    let out_b = dir.path().join("b.json.out");

    // Seed 99 via flag on a config that says 1 must equal seed 99 in config.
    let r1 = run(&[
        "tune", "--config", config_a.to_str().unwrap(), "--out", out_a.to_str().unwrap(),
        "--seed", "99",
    ]);
    let r2 = run(&["tune", "--config", config_b.to_str().unwrap(), "--out", out_b.to_str().unwrap()]);
    for (r, path) in [(&r1, &out_a), (&r2, &out_b)] {
        let code = r.status.code();
        assert!(code == Some(0) || code == Some(2), "unexpected exit {code:?}: {}", stderr_of(r));
        assert!(path.exists());
    }

    let report_a: TuneReport = serde_json::from_str(&fs::read_to_string(&out_a).unwrap()).unwrap();
    let report_b: TuneReport = serde_json::from_str(&fs::read_to_string(&out_b).unwrap()).unwrap();
    assert_eq!(report_a.result.seed, 99, "flag must override the config seed");
    assert_eq!(report_a.config.pso.seed, 99, "echoed config must show the effective seed");
    assert_eq!(report_a.result, report_b.result, "override must reproduce the explicit-seed run");
}

#[test]
fn tune_writes_trajectory_alongside_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "config.json", &small_tune_config(3));
    let out_path = dir.path().join("report.json");
    let out = run(&["tune", "--config", config.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    let code = out.status.code();
    assert!(code == Some(0) || code == Some(2), "unexpected exit {code:?}: {}", stderr_of(&out));

    let csv_path = dir.path().join("report.csv");
    let log = parse_trajectory(&fs::read_to_string(&csv_path).unwrap()).unwrap();
    assert_eq!(log.rows.len(), 3001);

    // The exported trajectory is the report's winner, re-scored.
    let report: TuneReport =
        serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    let fitness = exotune_core::eval::fitness_se(&log).unwrap();
    assert_eq!(
        fitness.to_bits(),
        report.result.best_fitness.to_bits(),
        "trajectory CSV must belong to the reported best gains"
    );
}

#[test]
fn physically_impossible_bands_exit_two_but_still_report() {
    let dir = tempfile::tempdir().unwrap();
    // Settling within 0.1 s needs |θ̈| far above the 20 N·m clamp: no gain
    // vector can satisfy this, so the search must end infeasible.
    let config = write(
        dir.path(),
        "config.json",
        &format!(
            r#"{{
  {STEP_REFERENCE},
  "sim": {{ "initial_state": {{ "theta": -1.0 }} }},
  "constraints": {{ "rise_time": 0.05, "response_time": 0.1 }},
  "pso": {{ "particles": 6, "generations": 4, "seed": 5 }}
}}"#
        ),
    );
    let out_path = dir.path().join("report.json");
    let out = run(&["tune", "--config", config.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).contains("feasible"), "stderr: {}", stderr_of(&out));

    let report: TuneReport =
        serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(!report.result.feasible);
    assert!(report.result.best_violation > 0.0);
    assert_eq!(report.result.history.len(), 4, "history must still cover every generation");
    assert!(dir.path().join("report.csv").exists(), "best trajectory still exported");
}

#[test]
fn evaluate_ideal_step_prints_exact_constraints() {
    let dir = tempfile::tempdir().unwrap();
    // Hand-built perfect response: y ≡ 1 for 3 s at 1 ms.
    let rows: Vec<TrajectoryRow> = (0..3001)
        .map(|k| TrajectoryRow {
            t: k as f64 * 1e-3,
            theta: -1.5,
            theta_d: -1.5,
            ..TrajectoryRow::zeroed()
        })
        .collect();
    let log = TrajectoryLog { dt: 1e-3, rows };
    let traj = write(dir.path(), "ideal.csv", &render_trajectory(&log));
    let constraints = write(
        dir.path(),
        "score.json",
        &format!(r#"{{ {STEP_REFERENCE} }}"#),
    );

    let out = run(&["evaluate", "--traj", traj.to_str().unwrap(), "--constraints", constraints.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let value: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(value["fitness"], 0.0);
    assert_eq!(value["feasible"], true);
    let c: Vec<f64> = value["constraints"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let expected = [-1.01, -0.02, -0.99, -0.01, -0.01];
    for (i, (got, want)) in c.iter().zip(expected).enumerate() {
        assert!(
            (got - want).abs() <= 1e-12,
            "constraint {} printed {} instead of {}", i + 1, got, want
        );
    }
}

#[test]
fn evaluate_truncated_trajectory_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<TrajectoryRow> = (0..1001)
        .map(|k| TrajectoryRow { t: k as f64 * 1e-3, theta: -1.5, theta_d: -1.5, ..TrajectoryRow::zeroed() })
        .collect();
    let traj = write(
        dir.path(),
        "short.csv",
        &render_trajectory(&TrajectoryLog { dt: 1e-3, rows }),
    );
    let constraints = write(dir.path(), "score.json", &format!(r#"{{ {STEP_REFERENCE} }}"#));
    let out = run(&["evaluate", "--traj", traj.to_str().unwrap(), "--constraints", constraints.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("covers only"), "stderr: {}", stderr_of(&out));
}

#[test]
fn evaluate_corrupt_csv_exits_one_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    text.push_str("0,0,0,0,0,0,0,0,0,0,0,0,0\n");
    text.push_str("1e-3,0,0,BROKEN,0,0,0,0,0,0,0,0,0\n");
    let traj = write(dir.path(), "bad.csv", &text);
    let constraints = write(dir.path(), "score.json", &format!(r#"{{ {STEP_REFERENCE} }}"#));
    let out = run(&["evaluate", "--traj", traj.to_str().unwrap(), "--constraints", constraints.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("line 3"), "stderr: {}", stderr_of(&out));
}

#[test]
fn bundled_configs_are_valid() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    for name in ["configs/default.json", "configs/simulate_example.json"] {
        let text = fs::read_to_string(root.join(name)).unwrap();
        exotune_cli::config::parse_config(&text)
            .unwrap_or_else(|e| panic!("{name} must validate: {e}"));
    }
}
