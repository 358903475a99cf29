//! Simulation and gain-tuning core for an adaptive knee-exoskeleton controller.
//!
//! The crate models a single actuated joint (shank + orthosis) driven by an
//! adaptive tracking controller, integrates the closed loop with a fixed-step
//! RK4 scheme, scores step responses against fitness and feasibility
//! constraints, and searches the six-dimensional gain space with a
//! constrained particle swarm.
//!
//! The crate is `no_std`-compatible (`alloc` required): disable the default
//! `std` feature for embedded or sandboxed use. All floating-point math goes
//! through [`libm`] so results are identical with and without `std`.
//!
//! Modules follow the data flow:
//!
//! * [`plant`] — joint dynamics (gravity, dry/viscous friction, torque input)
//! * [`controller`] — adaptive control law, adaptation rates, Lyapunov value
//! * [`sim`] — closed-loop RK4 integration producing a [`sim::TrajectoryLog`]
//! * [`eval`] — step reference, squared-error fitness, response constraints
//! * [`pso`] — constrained particle-swarm search over the gain box

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod controller;
pub mod eval;
pub mod plant;
pub mod pso;
pub mod sim;

use alloc::format;
use alloc::string::String;
use core::fmt;

/// A rejected configuration value.
///
/// `path` names the offending field relative to the structure that was
/// validated; callers wrap with [`InvalidParam::nested`] to build full paths
/// such as `pso.bounds.kappa`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvalidParam {
    pub path: String,
    pub reason: String,
}

impl InvalidParam {
    pub fn new(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { path: path.into(), reason: reason.into() }
    }

    /// Prefix the field path with the enclosing structure's name.
    pub fn nested(mut self, prefix: &str) -> Self {
        self.path = format!("{prefix}.{}", self.path);
        self
    }
}

impl fmt::Display for InvalidParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for InvalidParam {}

/// `Err(InvalidParam)` unless `value` is finite.
pub(crate) fn require_finite(path: &str, value: f64) -> Result<(), InvalidParam> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(InvalidParam::new(path, format!("must be finite, got {value}")))
    }
}
