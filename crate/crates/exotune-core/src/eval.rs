//! Reference generation and step-response scoring.
//!
//! A simulated trajectory is scored two ways: a squared-error fitness (mean
//! of `θ̃² + θ̇̃²` over all log rows) and a five-component feasibility vector
//! over the *normalized* response `y(t) = (θ(t) − θ_start)/(θ_target −
//! θ_start)`, so bands like "2 % overshoot" mean fractions of the commanded
//! step regardless of its direction or size.

use crate::controller::{ControllerGains, ReferencePoint};
use crate::plant::{PlantParams, THETA_ENVELOPE_MAX, THETA_ENVELOPE_MIN};
use crate::pso::{Evaluator, EvaluatorError, Position};
use crate::sim::{simulate, SimConfig, TrajectoryLog};
use crate::{require_finite, InvalidParam};
use alloc::format;
use core::fmt;

/// Shape of the desired-angle signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum ReferenceKind {
    /// Hold `theta_start` until `step_time`, then jump to `theta_target`.
    Step,
    /// Hold `theta_start` forever.
    Constant,
}

/// Desired-trajectory description. Velocity and acceleration references are
/// zero everywhere: the step is treated as an ideal setpoint change and its
/// distributional derivative at the jump instant is ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct ReferenceSpec {
    pub kind: ReferenceKind,
    /// Level before the step (rad); the held value for `constant`.
    pub theta_start: f64,
    /// Level after the step (rad). Required for `step`, ignored otherwise.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub theta_target: Option<f64>,
    /// Instant of the setpoint jump (s).
    #[cfg_attr(feature = "serde", serde(default))]
    pub step_time: f64,
}

impl ReferenceSpec {
    pub fn step(theta_start: f64, theta_target: f64) -> Self {
        Self { kind: ReferenceKind::Step, theta_start, theta_target: Some(theta_target), step_time: 0.0 }
    }

    pub fn constant(theta: f64) -> Self {
        Self { kind: ReferenceKind::Constant, theta_start: theta, theta_target: None, step_time: 0.0 }
    }

    /// Signed step magnitude `theta_target − theta_start`; `None` for a
    /// constant reference.
    pub fn step_delta(&self) -> Option<f64> {
        match self.kind {
            ReferenceKind::Step => self.theta_target.map(|t| t - self.theta_start),
            ReferenceKind::Constant => None,
        }
    }

    pub fn validate(&self) -> Result<(), InvalidParam> {
        let envelope = THETA_ENVELOPE_MIN..=THETA_ENVELOPE_MAX;
        require_finite("theta_start", self.theta_start)?;
        if !envelope.contains(&self.theta_start) {
            return Err(InvalidParam::new(
                "theta_start",
                format!("must lie in [-π/2, 0], got {}", self.theta_start),
            ));
        }
        require_finite("step_time", self.step_time)?;
        if self.step_time < 0.0 {
            return Err(InvalidParam::new("step_time", "must be >= 0"));
        }
        if let Some(target) = self.theta_target {
            require_finite("theta_target", target)?;
            if !envelope.contains(&target) {
                return Err(InvalidParam::new(
                    "theta_target",
                    format!("must lie in [-π/2, 0], got {target}"),
                ));
            }
        }
        if self.kind == ReferenceKind::Step {
            let target = self.theta_target.ok_or_else(|| {
                InvalidParam::new("theta_target", "required for kind = \"step\"")
            })?;
            if target == self.theta_start {
                return Err(InvalidParam::new(
                    "theta_target",
                    "must differ from theta_start for kind = \"step\"",
                ));
            }
        }
        Ok(())
    }
}

/// Desired-trajectory sample at time `t ≥ 0`.
pub fn reference_at(spec: &ReferenceSpec, t: f64) -> ReferencePoint {
    let theta_d = match spec.kind {
        ReferenceKind::Constant => spec.theta_start,
        ReferenceKind::Step => {
            if t < spec.step_time {
                spec.theta_start
            } else {
                spec.theta_target.unwrap_or(spec.theta_start)
            }
        }
    };
    ReferencePoint { theta_d, theta_d_dot: 0.0, theta_d_ddot: 0.0 }
}

/// Band and window parameters for the step-response constraints. All bands
/// are fractions of the normalized response (0.02 = 2 % of the step).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields, default)
)]
pub struct ConstraintParams {
    /// Allowed overshoot above the target before `response_time`.
    pub overshoot_band: f64,
    /// Allowed dip below the start level before `rise_time`.
    pub dip_band: f64,
    /// Minimum normalized progress demanded over [`rise_time`, `response_time`).
    pub rise_floor: f64,
    /// Half-width of the settling band around the target after `response_time`.
    pub settle_band: f64,
    /// Time by which the response must have started rising (s).
    pub rise_time: f64,
    /// Time by which the response must be inside the settling band (s).
    pub response_time: f64,
    /// End of the scored window (s); normally the simulation horizon.
    pub horizon: f64,
}

impl Default for ConstraintParams {
    fn default() -> Self {
        Self {
            overshoot_band: 0.02,
            dip_band: 0.01,
            rise_floor: 0.01,
            settle_band: 0.01,
            rise_time: 0.8,
            response_time: 1.0,
            horizon: 3.0,
        }
    }
}

impl ConstraintParams {
    pub fn validate(&self) -> Result<(), InvalidParam> {
        for (path, value) in [
            ("overshoot_band", self.overshoot_band),
            ("dip_band", self.dip_band),
            ("rise_floor", self.rise_floor),
            ("settle_band", self.settle_band),
        ] {
            require_finite(path, value)?;
            if value < 0.0 {
                return Err(InvalidParam::new(path, format!("must be >= 0, got {value}")));
            }
        }
        require_finite("rise_time", self.rise_time)?;
        require_finite("response_time", self.response_time)?;
        require_finite("horizon", self.horizon)?;
        if self.rise_time <= 0.0 {
            return Err(InvalidParam::new("rise_time", "must be > 0"));
        }
        if self.response_time <= self.rise_time {
            return Err(InvalidParam::new("response_time", "must exceed rise_time"));
        }
        if self.horizon <= self.response_time {
            return Err(InvalidParam::new("horizon", "must exceed response_time"));
        }
        Ok(())
    }
}

/// The five step-response constraint values; the response is acceptable
/// exactly when every component is ≤ 0 (boundary inclusive).
///
/// In order: pre-rise dip, overshoot, rise floor, settling-band overshoot,
/// settling-band undershoot.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(transparent)
)]
pub struct ConstraintVector(pub [f64; 5]);

impl ConstraintVector {
    /// All components inactive; the value reported for unconstrained
    /// problems (boundary-feasible by convention).
    pub const UNCONSTRAINED: Self = Self([0.0; 5]);

    pub fn is_feasible(&self) -> bool {
        self.0.iter().all(|c| *c <= 0.0)
    }

    /// Sum of positive parts; zero exactly when feasible.
    pub fn total_violation(&self) -> f64 {
        self.0.iter().map(|c| c.max(0.0)).sum()
    }
}

/// Fitness and feasibility of one candidate response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub fitness: f64,
    pub constraints: ConstraintVector,
}

/// Scoring failures.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    /// The trajectory log has no rows.
    EmptyLog,
    /// The log ends before the constraint horizon.
    LogTooShort { needed: f64, covered: f64 },
    /// Step constraints demand a step reference.
    NotStep,
    /// A constraint window contains no samples (sample spacing too coarse).
    EmptyWindow { from: f64, to: f64 },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyLog => write!(f, "trajectory log is empty"),
            Self::LogTooShort { needed, covered } => write!(
                f,
                "trajectory covers only {covered} s but the constraint horizon is {needed} s"
            ),
            Self::NotStep => write!(f, "step constraints require a step reference"),
            Self::EmptyWindow { from, to } => {
                write!(f, "no samples fall inside the window [{from}, {to}) s")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EvalError {}

/// Mean of `θ̃² + θ̇̃²` over all log rows (lower is better).
pub fn fitness_se(log: &TrajectoryLog) -> Result<f64, EvalError> {
    if log.rows.is_empty() {
        return Err(EvalError::EmptyLog);
    }
    let mut sum = 0.0;
    for row in &log.rows {
        let theta_err = row.theta - row.theta_d;
        let theta_err_dot = row.theta_dot - row.theta_d_dot;
        sum += theta_err * theta_err + theta_err_dot * theta_err_dot;
    }
    Ok(sum / log.rows.len() as f64)
}

/// First sample index whose time `k·dt` lies at or after `t`. The 1e-9 guard
/// keeps window edges stable when `t/dt` lands a rounding error above an
/// integer (e.g. 0.8/1e-3).
fn window_start_index(t: f64, dt: f64) -> usize {
    libm::ceil(t / dt - 1e-9) as usize
}

/// The five constraints over the normalized response. Windows are half-open
/// `[a, b)` on the sample grid:
///
/// * `c1 = −min y over [0, rise_time) − dip_band`
/// * `c2 =  max y over [0, response_time) − (1 + overshoot_band)`
/// * `c3 = −min y over [rise_time, response_time) + rise_floor`
/// * `c4 =  max y over [response_time, horizon) − (1 + settle_band)`
/// * `c5 = −min y over [response_time, horizon) + (1 − settle_band)`
pub fn step_constraints(
    log: &TrajectoryLog,
    params: &ConstraintParams,
    spec: &ReferenceSpec,
) -> Result<ConstraintVector, EvalError> {
    let delta = spec.step_delta().ok_or(EvalError::NotStep)?;
    if log.rows.is_empty() {
        return Err(EvalError::EmptyLog);
    }
    let dt = log.dt;
    let i_rise = window_start_index(params.rise_time, dt);
    let i_resp = window_start_index(params.response_time, dt);
    let i_end = window_start_index(params.horizon, dt);
    // Demand coverage of [0, horizon] inclusive so the trailing window is
    // never silently truncated.
    if log.rows.len() < i_end + 1 {
        return Err(EvalError::LogTooShort {
            needed: params.horizon,
            covered: (log.rows.len() - 1) as f64 * dt,
        });
    }

    let y = |k: usize| (log.rows[k].theta - spec.theta_start) / delta;
    let window = |from: usize, to: usize, t_from: f64, t_to: f64| -> Result<(f64, f64), EvalError> {
        if from >= to {
            return Err(EvalError::EmptyWindow { from: t_from, to: t_to });
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for k in from..to {
            let v = y(k);
            min = min.min(v);
            max = max.max(v);
        }
        Ok((min, max))
    };

    let (min_pre, _) = window(0, i_rise, 0.0, params.rise_time)?;
    let (_, max_rise) = window(0, i_resp, 0.0, params.response_time)?;
    let (min_mid, _) = window(i_rise, i_resp, params.rise_time, params.response_time)?;
    let (min_settle, max_settle) =
        window(i_resp, i_end, params.response_time, params.horizon)?;

    Ok(ConstraintVector([
        -min_pre - params.dip_band,
        max_rise - (params.overshoot_band + 1.0),
        -min_mid + params.rise_floor,
        max_settle - (1.0 + params.settle_band),
        -min_settle + (1.0 - params.settle_band),
    ]))
}

/// The gain-tuning problem: simulate the closed loop for a candidate gain
/// vector and score the step response. This is the evaluator the optimizer
/// calls once per particle per generation.
#[derive(Debug, Clone)]
pub struct StepResponseProblem {
    pub plant: PlantParams,
    pub reference: ReferenceSpec,
    pub sim: SimConfig,
    pub constraints: ConstraintParams,
}

impl StepResponseProblem {
    /// Simulate one gain vector and return the full log alongside its
    /// evaluation (used by front-ends to export the winning trajectory).
    pub fn run(&self, gains: &ControllerGains) -> Result<(TrajectoryLog, Evaluation), EvaluatorError> {
        let log = simulate(&self.plant, gains, &self.reference, &self.sim)?;
        let fitness = fitness_se(&log)?;
        let constraints = step_constraints(&log, &self.constraints, &self.reference)?;
        Ok((log, Evaluation { fitness, constraints }))
    }
}

impl Evaluator for StepResponseProblem {
    fn evaluate(&self, position: &Position) -> Result<Evaluation, EvaluatorError> {
        let gains = ControllerGains::from_array(*position);
        self.run(&gains).map(|(_, eval)| eval)
    }
}
