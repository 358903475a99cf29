//! Adaptive tracking controller for the exoskeleton joint.
//!
//! The torque command mixes a feedforward inertia term, friction and gravity
//! compensation built from online parameter estimates, and feedback on the
//! sliding variable `s = θ̇̃ + γ·θ̃` (tilde = tracking error). The estimates
//! evolve by gradient adaptation laws driven by `s`; a Lyapunov value over
//! the tracking and estimation errors certifies monotone descent while the
//! torque stays unsaturated.

use crate::plant::{plant_accel, sign_db, JointState, PlantParams};
use crate::{require_finite, InvalidParam};
use alloc::format;

/// The six tunable controller gains, in the fixed tuning-vector order
/// `[kappa, gamma, eta1, eta2, eta3, eta4]` used by the optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct ControllerGains {
    /// Sliding-variable feedback gain κ.
    pub kappa: f64,
    /// Error-mixing slope γ (1/s) in `s = θ̇̃ + γ·θ̃`.
    pub gamma: f64,
    /// Adaptation rate η₁ for the inertia estimate.
    pub eta1: f64,
    /// Adaptation rate η₂ for the solid-friction estimate.
    pub eta2: f64,
    /// Adaptation rate η₃ for the viscous-friction estimate.
    pub eta3: f64,
    /// Adaptation rate η₄ for the gravity-torque estimate.
    pub eta4: f64,
}

impl ControllerGains {
    pub fn as_array(&self) -> [f64; 6] {
        [self.kappa, self.gamma, self.eta1, self.eta2, self.eta3, self.eta4]
    }

    pub fn from_array(q: [f64; 6]) -> Self {
        Self { kappa: q[0], gamma: q[1], eta1: q[2], eta2: q[3], eta3: q[4], eta4: q[5] }
    }

    /// All six gains must be finite and strictly positive: γ ≤ 0 breaks the
    /// sliding-variable error mixing and η ≤ 0 breaks the adaptation laws
    /// (and divides by zero in the Lyapunov value).
    pub fn validate(&self) -> Result<(), InvalidParam> {
        for (path, value) in [
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("eta3", self.eta3),
            ("eta4", self.eta4),
        ] {
            require_finite(path, value)?;
            if value <= 0.0 {
                return Err(InvalidParam::new(path, format!("must be > 0, got {value}")));
            }
        }
        Ok(())
    }
}

/// Online estimates of the plant parameters. Adaptation is plain gradient
/// descent with no projection, so estimates may wander negative; that is
/// acceptable — tracking, not parameter identification, is the goal.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimates {
    /// Estimated inertia Î (kg·m²).
    pub i_hat: f64,
    /// Estimated solid friction Ĉs (N·m).
    pub c_s_hat: f64,
    /// Estimated viscous friction Ĉv (N·m·s/rad).
    pub c_v_hat: f64,
    /// Estimated gravity torque Γ̂g (N·m).
    pub gamma_g_hat: f64,
}

/// Desired trajectory sample: angle, velocity, acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePoint {
    pub theta_d: f64,
    pub theta_d_dot: f64,
    pub theta_d_ddot: f64,
}

/// Sliding variable `s = θ̇̃ + γ·θ̃` over the tracking errors
/// `θ̃ = θ − θ_d`, `θ̇̃ = θ̇ − θ̇_d`. Driving `s → 0` collapses the error
/// dynamics to a stable first-order decay with rate γ.
pub fn sliding_variable(theta_err: f64, theta_err_dot: f64, gamma: f64) -> f64 {
    debug_assert!(gamma > 0.0);
    theta_err_dot + gamma * theta_err
}

/// The feedforward acceleration `θ̈_d − γ·θ̇̃` shared by the torque law and
/// the inertia adaptation law.
fn accel_feedforward(state: &JointState, refp: &ReferencePoint, gamma: f64) -> f64 {
    refp.theta_d_ddot - gamma * (state.theta_dot - refp.theta_d_dot)
}

/// Un-saturated control torque (N·m):
///
/// `Γ = Î·(θ̈_d − γθ̇̃) + Ĉs·sign_db(θ̇) + Ĉv·θ̇ − κ·s + Γ̂g·cosθ`
pub fn control_torque_raw(
    state: &JointState,
    refp: &ReferencePoint,
    est: &Estimates,
    gains: &ControllerGains,
    sign_eps: f64,
) -> f64 {
    let theta_err = state.theta - refp.theta_d;
    let theta_err_dot = state.theta_dot - refp.theta_d_dot;
    let s = sliding_variable(theta_err, theta_err_dot, gains.gamma);
    est.i_hat * accel_feedforward(state, refp, gains.gamma)
        + est.c_s_hat * sign_db(state.theta_dot, sign_eps)
        + est.c_v_hat * state.theta_dot
        - gains.kappa * s
        + est.gamma_g_hat * libm::cos(state.theta)
}

/// [`control_torque_raw`] clamped to the actuator limit `±torque_limit`.
pub fn control_torque(
    state: &JointState,
    refp: &ReferencePoint,
    est: &Estimates,
    gains: &ControllerGains,
    torque_limit: f64,
    sign_eps: f64,
) -> f64 {
    debug_assert!(torque_limit > 0.0);
    control_torque_raw(state, refp, est, gains, sign_eps).clamp(-torque_limit, torque_limit)
}

/// Time derivatives of the four estimates, in the order
/// `[dÎ, dĈs, dĈv, dΓ̂g]`:
///
/// `(−η₁·(θ̈_d − γθ̇̃)·s, −η₂·sign_db(θ̇)·s, −η₃·θ̇·s, −η₄·cosθ·s)`
pub fn adaptation_rates(
    state: &JointState,
    refp: &ReferencePoint,
    s: f64,
    gains: &ControllerGains,
    sign_eps: f64,
) -> [f64; 4] {
    [
        -gains.eta1 * accel_feedforward(state, refp, gains.gamma) * s,
        -gains.eta2 * sign_db(state.theta_dot, sign_eps) * s,
        -gains.eta3 * state.theta_dot * s,
        -gains.eta4 * libm::cos(state.theta) * s,
    ]
}

/// Lyapunov value over the sliding variable, the parameter errors
/// `[Ĩ, C̃s, C̃v, Γ̃g]` (true − estimate), and the angle error:
///
/// `V = ½·I·s² + Ĩ²/2η₁ + C̃s²/2η₂ + C̃v²/2η₃ + Γ̃g²/2η₄ + κγ·θ̃²`
///
/// Needs the true inertia, so it is a monitoring quantity, not something the
/// controller could compute online.
pub fn lyapunov_value(
    s: f64,
    param_errors: &[f64; 4],
    theta_err: f64,
    true_inertia: f64,
    gains: &ControllerGains,
) -> f64 {
    0.5 * true_inertia * s * s
        + param_errors[0] * param_errors[0] / (2.0 * gains.eta1)
        + param_errors[1] * param_errors[1] / (2.0 * gains.eta2)
        + param_errors[2] * param_errors[2] / (2.0 * gains.eta3)
        + param_errors[3] * param_errors[3] / (2.0 * gains.eta4)
        + gains.kappa * gains.gamma * theta_err * theta_err
}

/// Both sides of the closed-loop identity that ties the plant to the
/// controller. With the *unsaturated* control law applied and zero wearer
/// torque, substituting the torque into the joint dynamics gives
///
/// `I·ṡ = −κs − Ĩ·(θ̈_d − γθ̇̃) − C̃s·sign_db(θ̇) − C̃v·θ̇ − Γ̃g·cosθ`
///
/// (tilde = true − estimate). The equality is algebraic — independent of the
/// integrator — so the residual is a cheap self-check at any logged state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedLoopSides {
    /// `I·ṡ` computed from the plant dynamics under the raw control torque.
    pub plant_side: f64,
    /// The error-term expansion on the controller side.
    pub controller_side: f64,
}

impl ClosedLoopSides {
    pub fn residual(&self) -> f64 {
        self.plant_side - self.controller_side
    }
}

pub fn closed_loop_sides(
    state: &JointState,
    refp: &ReferencePoint,
    est: &Estimates,
    gains: &ControllerGains,
    plant: &PlantParams,
    sign_eps: f64,
) -> ClosedLoopSides {
    let torque = control_torque_raw(state, refp, est, gains, sign_eps);
    let accel = plant_accel(state, torque, 0.0, plant, sign_eps);
    let theta_err = state.theta - refp.theta_d;
    let theta_err_dot = state.theta_dot - refp.theta_d_dot;
    // ṡ = θ̈̃ + γ·θ̇̃
    let s_dot = accel - refp.theta_d_ddot + gains.gamma * theta_err_dot;
    let s = sliding_variable(theta_err, theta_err_dot, gains.gamma);
    let controller_side = -gains.kappa * s
        - (plant.inertia - est.i_hat) * accel_feedforward(state, refp, gains.gamma)
        - (plant.solid_friction - est.c_s_hat) * sign_db(state.theta_dot, sign_eps)
        - (plant.viscous_friction - est.c_v_hat) * state.theta_dot
        - (plant.gravity_torque - est.gamma_g_hat) * libm::cos(state.theta);
    ClosedLoopSides { plant_side: plant.inertia * s_dot, controller_side }
}
