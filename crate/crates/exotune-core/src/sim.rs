//! Closed-loop integration of the joint dynamics and the adaptive estimates.
//!
//! The augmented state is six-dimensional: `(θ, θ̇, Î, Ĉs, Ĉv, Γ̂g)`. A
//! classic fixed-step fourth-order Runge–Kutta scheme advances it, with the
//! control torque re-evaluated (and re-clamped) inside every stage, i.e. the
//! controller is treated as continuous rather than sampled. Each step is
//! logged: states, reference, torque, sliding variable, Lyapunov value, and
//! bit flags for envelope excursions and torque saturation.

use crate::controller::{
    adaptation_rates, control_torque_raw, lyapunov_value, sliding_variable, ControllerGains,
    Estimates,
};
use crate::eval::{reference_at, ReferenceSpec};
use crate::plant::{
    plant_accel, JointState, PlantParams, SPEED_ENVELOPE, THETA_ENVELOPE_MAX, THETA_ENVELOPE_MIN,
};
use crate::{require_finite, InvalidParam};
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

/// Row flag: joint angle outside the [−π/2, 0] envelope.
pub const FLAG_THETA_ENVELOPE: u8 = 1 << 0;
/// Row flag: |angular velocity| above the envelope limit.
pub const FLAG_SPEED_ENVELOPE: u8 = 1 << 1;
/// Row flag: the torque at this row's state hit the actuator limit.
pub const FLAG_TORQUE_CLAMPED: u8 = 1 << 2;
/// Row flag: some integrator stage of the step *ending* at this row hit the
/// actuator limit (the clamp may hide between log samples).
pub const FLAG_STAGE_CLAMPED: u8 = 1 << 3;

/// Augmented simulation state: joint kinematics plus the four controller
/// estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields, default)
)]
pub struct SimState {
    /// Joint angle (rad).
    pub theta: f64,
    /// Joint angular velocity (rad/s).
    pub theta_dot: f64,
    /// Initial inertia estimate (kg·m²).
    pub i_hat: f64,
    /// Initial solid-friction estimate (N·m).
    pub c_s_hat: f64,
    /// Initial viscous-friction estimate (N·m·s/rad).
    pub c_v_hat: f64,
    /// Initial gravity-torque estimate (N·m).
    pub gamma_g_hat: f64,
}

impl Default for SimState {
    /// Shank at rest hanging vertically, no prior parameter knowledge.
    fn default() -> Self {
        Self {
            theta: THETA_ENVELOPE_MIN,
            theta_dot: 0.0,
            i_hat: 0.0,
            c_s_hat: 0.0,
            c_v_hat: 0.0,
            gamma_g_hat: 0.0,
        }
    }
}

impl SimState {
    pub fn as_array(&self) -> [f64; 6] {
        [self.theta, self.theta_dot, self.i_hat, self.c_s_hat, self.c_v_hat, self.gamma_g_hat]
    }

    pub fn from_array(y: [f64; 6]) -> Self {
        Self { theta: y[0], theta_dot: y[1], i_hat: y[2], c_s_hat: y[3], c_v_hat: y[4], gamma_g_hat: y[5] }
    }

    pub fn validate(&self) -> Result<(), InvalidParam> {
        for (path, value) in [
            ("theta", self.theta),
            ("theta_dot", self.theta_dot),
            ("i_hat", self.i_hat),
            ("c_s_hat", self.c_s_hat),
            ("c_v_hat", self.c_v_hat),
            ("gamma_g_hat", self.gamma_g_hat),
        ] {
            require_finite(path, value)?;
        }
        Ok(())
    }
}

/// Integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields, default)
)]
pub struct SimConfig {
    /// Integrator step (s).
    pub dt: f64,
    /// Horizon (s); must be an integer multiple of `dt`.
    pub t_final: f64,
    pub initial_state: SimState,
    /// Actuator saturation (N·m); `+inf` disables the clamp.
    pub torque_limit: f64,
    /// Dead-band half-width for the sign of the velocity (rad/s).
    pub sign_deadband: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 3.0,
            initial_state: SimState::default(),
            torque_limit: 20.0,
            sign_deadband: 1e-3,
        }
    }
}

impl SimConfig {
    /// Number of integration steps; the log gains one extra row for t = 0.
    pub fn steps(&self) -> Result<usize, InvalidParam> {
        let ratio = self.t_final / self.dt;
        let rounded = libm::round(ratio);
        if (ratio - rounded).abs() > 1e-9 * ratio.max(1.0) {
            return Err(InvalidParam::new(
                "t_final",
                format!("must be an integer multiple of dt, got t_final/dt = {ratio}"),
            ));
        }
        Ok(rounded as usize)
    }

    pub fn validate(&self) -> Result<(), InvalidParam> {
        require_finite("dt", self.dt)?;
        require_finite("t_final", self.t_final)?;
        require_finite("sign_deadband", self.sign_deadband)?;
        if self.dt <= 0.0 {
            return Err(InvalidParam::new("dt", format!("must be > 0, got {}", self.dt)));
        }
        if self.t_final < self.dt {
            return Err(InvalidParam::new(
                "t_final",
                format!("must be at least dt, got {}", self.t_final),
            ));
        }
        self.steps()?;
        // NaN fails the comparison; +inf is allowed and disables the clamp.
        if !(self.torque_limit > 0.0) {
            return Err(InvalidParam::new(
                "torque_limit",
                format!("must be > 0, got {}", self.torque_limit),
            ));
        }
        if self.sign_deadband < 0.0 {
            return Err(InvalidParam::new("sign_deadband", "must be >= 0"));
        }
        self.initial_state.validate().map_err(|e| e.nested("initial_state"))
    }
}

/// One log sample. Field names match the CSV column contract of the CLI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    /// Sample time (s), `k·dt`.
    pub t: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub theta_d: f64,
    pub theta_d_dot: f64,
    /// Applied (clamped) torque at this row's state (N·m).
    pub torque: f64,
    /// Sliding variable at this row.
    pub s: f64,
    /// Lyapunov value at this row (needs the true plant parameters).
    pub lyapunov: f64,
    pub i_hat: f64,
    pub c_s_hat: f64,
    pub c_v_hat: f64,
    pub gamma_g_hat: f64,
    /// Bitwise OR of the `FLAG_*` constants.
    pub flags: u8,
}

impl TrajectoryRow {
    /// All-zero row; convenient base for tests and synthetic logs.
    pub fn zeroed() -> Self {
        Self {
            t: 0.0,
            theta: 0.0,
            theta_dot: 0.0,
            theta_d: 0.0,
            theta_d_dot: 0.0,
            torque: 0.0,
            s: 0.0,
            lyapunov: 0.0,
            i_hat: 0.0,
            c_s_hat: 0.0,
            c_v_hat: 0.0,
            gamma_g_hat: 0.0,
            flags: 0,
        }
    }
}

/// Uniformly sampled trajectory: `rows[k].t == k·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    /// Sample spacing (s).
    pub dt: f64,
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryLog {
    /// Rebuild a log from externally sourced rows (e.g. a parsed CSV),
    /// checking that the time column is the uniform grid the scorers assume.
    pub fn from_rows(rows: Vec<TrajectoryRow>) -> Result<Self, InvalidParam> {
        if rows.len() < 2 {
            return Err(InvalidParam::new(
                "rows",
                "need at least two rows to establish the sample spacing",
            ));
        }
        if rows[0].t != 0.0 {
            return Err(InvalidParam::new(
                "rows",
                format!("time must start at 0, got {}", rows[0].t),
            ));
        }
        let dt = rows[1].t - rows[0].t;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(InvalidParam::new("rows", format!("non-positive sample spacing {dt}")));
        }
        for (k, row) in rows.iter().enumerate() {
            let expected = k as f64 * dt;
            if (row.t - expected).abs() > 1e-9 * expected.max(1.0) {
                return Err(InvalidParam::new(
                    "rows",
                    format!("row {k} at t = {} breaks the uniform spacing {dt}", row.t),
                ));
            }
        }
        Ok(Self { dt, rows })
    }
}

/// Simulation failure.
#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    InvalidConfig(InvalidParam),
    /// The state left the representable range; `t_last_good` is the time of
    /// the last finite sample.
    NonFinite { t_last_good: f64 },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidConfig(e) => write!(f, "invalid simulation input: {e}"),
            Self::NonFinite { t_last_good } => write!(
                f,
                "state diverged to a non-finite value; last good sample at t = {t_last_good} s"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SimError {}

impl From<InvalidParam> for SimError {
    fn from(e: InvalidParam) -> Self {
        Self::InvalidConfig(e)
    }
}

/// Derivative of the augmented state at `(t, y)`, plus the applied torque
/// and whether the clamp engaged.
///
/// A non-finite input state or an overflowed torque yields NaN derivatives
/// so the divergence surfaces at the caller's post-step check instead of
/// feeding garbage into the plant model.
fn stage(
    t: f64,
    y: &[f64; 6],
    plant: &PlantParams,
    gains: &ControllerGains,
    reference: &ReferenceSpec,
    torque_limit: f64,
    sign_eps: f64,
) -> ([f64; 6], f64, bool) {
    if !y.iter().all(|v| v.is_finite()) {
        return ([f64::NAN; 6], f64::NAN, false);
    }
    let state = JointState { theta: y[0], theta_dot: y[1] };
    let est = Estimates { i_hat: y[2], c_s_hat: y[3], c_v_hat: y[4], gamma_g_hat: y[5] };
    let refp = reference_at(reference, t);
    let raw = control_torque_raw(&state, &refp, &est, gains, sign_eps);
    let torque = raw.clamp(-torque_limit, torque_limit);
    if !torque.is_finite() {
        return ([f64::NAN; 6], torque, false);
    }
    let clamped = torque != raw;
    let s = sliding_variable(
        state.theta - refp.theta_d,
        state.theta_dot - refp.theta_d_dot,
        gains.gamma,
    );
    let rates = adaptation_rates(&state, &refp, s, gains, sign_eps);
    let accel = plant_accel(&state, torque, 0.0, plant, sign_eps);
    ([state.theta_dot, accel, rates[0], rates[1], rates[2], rates[3]], torque, clamped)
}

/// Integrate the closed loop over `[0, t_final]` and log every step.
///
/// Deterministic: identical inputs produce bit-identical logs. The wearer
/// torque is fixed at zero (passive rehabilitation mode).
pub fn simulate(
    plant: &PlantParams,
    gains: &ControllerGains,
    reference: &ReferenceSpec,
    sim: &SimConfig,
) -> Result<TrajectoryLog, SimError> {
    plant.validate().map_err(|e| e.nested("plant"))?;
    gains.validate().map_err(|e| e.nested("gains"))?;
    reference.validate().map_err(|e| e.nested("reference"))?;
    sim.validate().map_err(|e| e.nested("sim"))?;
    let steps = sim.steps().map_err(|e| e.nested("sim"))?;

    let dt = sim.dt;
    let eps = sim.sign_deadband;
    let limit = sim.torque_limit;
    let mut y = sim.initial_state.as_array();
    let mut rows = Vec::with_capacity(steps + 1);
    let mut stage_clamped_prev = false;

    for k in 0..=steps {
        let t = k as f64 * dt;
        let (d1, torque, clamped) = stage(t, &y, plant, gains, reference, limit, eps);

        let refp = reference_at(reference, t);
        let theta_err = y[0] - refp.theta_d;
        let theta_err_dot = y[1] - refp.theta_d_dot;
        let s = sliding_variable(theta_err, theta_err_dot, gains.gamma);
        let param_errors = [
            plant.inertia - y[2],
            plant.solid_friction - y[3],
            plant.viscous_friction - y[4],
            plant.gravity_torque - y[5],
        ];
        let v = lyapunov_value(s, &param_errors, theta_err, plant.inertia, gains);

        let mut flags = 0u8;
        if !(THETA_ENVELOPE_MIN..=THETA_ENVELOPE_MAX).contains(&y[0]) {
            flags |= FLAG_THETA_ENVELOPE;
        }
        if y[1].abs() > SPEED_ENVELOPE {
            flags |= FLAG_SPEED_ENVELOPE;
        }
        if clamped {
            flags |= FLAG_TORQUE_CLAMPED;
        }
        if stage_clamped_prev {
            flags |= FLAG_STAGE_CLAMPED;
        }

        rows.push(TrajectoryRow {
            t,
            theta: y[0],
            theta_dot: y[1],
            theta_d: refp.theta_d,
            theta_d_dot: refp.theta_d_dot,
            torque,
            s,
            lyapunov: v,
            i_hat: y[2],
            c_s_hat: y[3],
            c_v_hat: y[4],
            gamma_g_hat: y[5],
            flags,
        });

        if k == steps {
            break;
        }

        let half = 0.5 * dt;
        let mut y2 = y;
        for i in 0..6 {
            y2[i] += half * d1[i];
        }
        let (d2, _, c2) = stage(t + half, &y2, plant, gains, reference, limit, eps);
        let mut y3 = y;
        for i in 0..6 {
            y3[i] += half * d2[i];
        }
        let (d3, _, c3) = stage(t + half, &y3, plant, gains, reference, limit, eps);
        let mut y4 = y;
        for i in 0..6 {
            y4[i] += dt * d3[i];
        }
        let (d4, _, c4) = stage(t + dt, &y4, plant, gains, reference, limit, eps);

        for i in 0..6 {
            y[i] += dt / 6.0 * (d1[i] + 2.0 * d2[i] + 2.0 * d3[i] + d4[i]);
        }
        stage_clamped_prev = clamped || c2 || c3 || c4;

        if !y.iter().all(|v| v.is_finite()) {
            return Err(SimError::NonFinite { t_last_good: t });
        }
    }

    Ok(TrajectoryLog { dt, rows })
}
