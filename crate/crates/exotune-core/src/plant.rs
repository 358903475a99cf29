//! Rigid-body dynamics of the actuated knee joint (shank + orthosis).
//!
//! One rotational degree of freedom: the joint angle `theta` is measured
//! relative to the thigh, with `-π/2` the shank hanging vertically and `0`
//! full extension. The plant sees a gravity torque scaled by `cos θ`, solid
//! (dry) and viscous friction opposing motion, the actuator torque, and an
//! optional bounded torque from the wearer.

use crate::{require_finite, InvalidParam};
use alloc::format;
use core::f64::consts::FRAC_PI_2;

/// Lower edge of the joint-angle operating envelope (rad).
pub const THETA_ENVELOPE_MIN: f64 = -FRAC_PI_2;
/// Upper edge of the joint-angle operating envelope (rad).
pub const THETA_ENVELOPE_MAX: f64 = 0.0;
/// Operating envelope on |angular velocity| (rad/s).
pub const SPEED_ENVELOPE: f64 = 3.1;

/// True physical parameters of the shank + orthosis assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields, default)
)]
pub struct PlantParams {
    /// Rotational inertia about the knee axis (kg·m²). Strictly positive.
    pub inertia: f64,
    /// Peak gravity torque magnitude (N·m); enters the dynamics as
    /// `-gravity_torque · cos θ`, so it vanishes with the shank vertical.
    pub gravity_torque: f64,
    /// Solid (dry) friction torque magnitude (N·m).
    pub solid_friction: f64,
    /// Viscous friction coefficient (N·m·s/rad).
    pub viscous_friction: f64,
    /// Bound on the wearer-applied torque magnitude (N·m).
    pub human_torque_bound: f64,
}

impl Default for PlantParams {
    /// Plausible magnitudes for an adult shank plus a light orthosis.
    fn default() -> Self {
        Self {
            inertia: 0.4,
            gravity_torque: 4.0,
            solid_friction: 0.6,
            viscous_friction: 0.2,
            human_torque_bound: 5.0,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<(), InvalidParam> {
        require_finite("inertia", self.inertia)?;
        require_finite("gravity_torque", self.gravity_torque)?;
        require_finite("solid_friction", self.solid_friction)?;
        require_finite("viscous_friction", self.viscous_friction)?;
        require_finite("human_torque_bound", self.human_torque_bound)?;
        if self.inertia <= 0.0 {
            return Err(InvalidParam::new(
                "inertia",
                format!("must be > 0, got {}", self.inertia),
            ));
        }
        for (path, value) in [
            ("gravity_torque", self.gravity_torque),
            ("solid_friction", self.solid_friction),
            ("viscous_friction", self.viscous_friction),
            ("human_torque_bound", self.human_torque_bound),
        ] {
            if value < 0.0 {
                return Err(InvalidParam::new(path, format!("must be >= 0, got {value}")));
            }
        }
        Ok(())
    }
}

/// Instantaneous kinematic state of the joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    /// Joint angle (rad).
    pub theta: f64,
    /// Joint angular velocity (rad/s).
    pub theta_dot: f64,
}

impl JointState {
    /// True when the state sits inside the angle/speed operating envelope.
    /// Excursions are logged as flags, never clamped — the physics is allowed
    /// to leave the envelope and the optimizer is expected to avoid it.
    pub fn within_envelope(&self) -> bool {
        (THETA_ENVELOPE_MIN..=THETA_ENVELOPE_MAX).contains(&self.theta)
            && self.theta_dot.abs() <= SPEED_ENVELOPE
    }
}

/// Dead-band sign: `0` for `|theta_dot| ≤ eps`, otherwise `±1`.
///
/// The dead band keeps the dry-friction and switching terms from chattering
/// across velocity zero-crossings at a finite integration step; `eps = 0`
/// recovers the classical sign function.
pub fn sign_db(theta_dot: f64, eps: f64) -> f64 {
    debug_assert!(eps >= 0.0, "dead-band width must be nonnegative");
    if theta_dot.abs() <= eps {
        0.0
    } else if theta_dot > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Angular acceleration of the joint (rad/s²) under an applied actuator
/// torque and a wearer torque (both N·m):
///
/// `θ̈ = (−Γg·cosθ + Γ + Γh − Cs·sign_db(θ̇, eps) − Cv·θ̇) / I`
pub fn plant_accel(
    state: &JointState,
    torque: f64,
    human_torque: f64,
    params: &PlantParams,
    sign_eps: f64,
) -> f64 {
    debug_assert!(state.theta.is_finite() && state.theta_dot.is_finite());
    debug_assert!(torque.is_finite() && human_torque.is_finite());
    debug_assert!(human_torque.abs() <= params.human_torque_bound);
    (-params.gravity_torque * libm::cos(state.theta) + torque + human_torque
        - params.solid_friction * sign_db(state.theta_dot, sign_eps)
        - params.viscous_friction * state.theta_dot)
        / params.inertia
}
