//! JSON configuration schema shared by the subcommands.
//!
//! Parsing is strict: unknown fields are rejected, and both parse and
//! validation errors carry the dotted path of the offending field (e.g.
//! `pso.bounds.kappa.min`). Every section except `reference` has defaults,
//! so a minimal config is just the reference step.

use crate::CliError;
use exotune_core::controller::ControllerGains;
use exotune_core::eval::{ConstraintParams, ReferenceSpec};
use exotune_core::plant::PlantParams;
use exotune_core::pso::{DimBounds, PsoConfig, DEFAULT_GAIN_BOUNDS};
use exotune_core::sim::SimConfig;
use exotune_core::InvalidParam;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

/// Closed search interval for one gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainRange {
    pub min: f64,
    pub max: f64,
}

impl From<GainRange> for DimBounds {
    fn from(r: GainRange) -> Self {
        Self { min: r.min, max: r.max }
    }
}

impl From<DimBounds> for GainRange {
    fn from(b: DimBounds) -> Self {
        Self { min: b.min, max: b.max }
    }
}

/// Per-gain search intervals, named in control-law order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainBoundsConfig {
    pub kappa: GainRange,
    pub gamma: GainRange,
    pub eta1: GainRange,
    pub eta2: GainRange,
    pub eta3: GainRange,
    pub eta4: GainRange,
}

impl Default for GainBoundsConfig {
    fn default() -> Self {
        let b = DEFAULT_GAIN_BOUNDS;
        Self {
            kappa: b[0].into(),
            gamma: b[1].into(),
            eta1: b[2].into(),
            eta2: b[3].into(),
            eta3: b[4].into(),
            eta4: b[5].into(),
        }
    }
}

impl GainBoundsConfig {
    /// Bounds in the optimizer's dimension order.
    pub fn to_dims(&self) -> [DimBounds; 6] {
        [
            self.kappa.into(),
            self.gamma.into(),
            self.eta1.into(),
            self.eta2.into(),
            self.eta3.into(),
            self.eta4.into(),
        ]
    }

    fn validate(&self) -> Result<(), InvalidParam> {
        let named = [
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("eta3", self.eta3),
            ("eta4", self.eta4),
        ];
        for (name, range) in named {
            let check = |field: &str, value: f64| -> Result<(), InvalidParam> {
                if !value.is_finite() {
                    return Err(InvalidParam::new(
                        format!("{name}.{field}"),
                        format!("must be finite, got {value}"),
                    ));
                }
                Ok(())
            };
            check("min", range.min)?;
            check("max", range.max)?;
            if range.min <= 0.0 {
                // Positions inside the box are used directly as gains, and
                // every gain must be strictly positive.
                return Err(InvalidParam::new(
                    format!("{name}.min"),
                    format!("must be > 0, got {}", range.min),
                ));
            }
            if range.min >= range.max {
                return Err(InvalidParam::new(
                    format!("{name}.min"),
                    format!("must be below max, got [{}, {}]", range.min, range.max),
                ));
            }
        }
        Ok(())
    }
}

/// Swarm settings as they appear in the config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsoSection {
    pub particles: usize,
    pub generations: usize,
    pub cognitive: f64,
    pub social: f64,
    pub inertia_start: f64,
    pub inertia_end: f64,
    pub velocity_clamp: f64,
    pub seed: u64,
    pub bounds: GainBoundsConfig,
}

impl Default for PsoSection {
    fn default() -> Self {
        let core = PsoConfig::default();
        Self {
            particles: core.particles,
            generations: core.generations,
            cognitive: core.cognitive,
            social: core.social,
            inertia_start: core.inertia_start,
            inertia_end: core.inertia_end,
            velocity_clamp: core.velocity_clamp,
            seed: core.seed,
            bounds: GainBoundsConfig::default(),
        }
    }
}

impl PsoSection {
    pub fn to_core(&self) -> PsoConfig {
        PsoConfig {
            particles: self.particles,
            generations: self.generations,
            cognitive: self.cognitive,
            social: self.social,
            inertia_start: self.inertia_start,
            inertia_end: self.inertia_end,
            velocity_clamp: self.velocity_clamp,
            seed: self.seed,
            bounds: self.bounds.to_dims(),
        }
    }
}

/// Whole run configuration. `reference` is the only required section;
/// `gains` is needed only by `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub plant: PlantParams,
    pub reference: ReferenceSpec,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub constraints: ConstraintParams,
    #[serde(default)]
    pub pso: PsoSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<ControllerGains>,
}

/// Scoring settings for the `evaluate` subcommand: which step the trajectory
/// was supposed to follow, and the constraint bands to hold it to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    pub reference: ReferenceSpec,
    #[serde(default)]
    pub constraints: ConstraintParams,
}

/// Cross-field checks on top of serde's structural validation.
pub fn validate_config(config: &RunConfig) -> Result<(), InvalidParam> {
    config.plant.validate().map_err(|e| e.nested("plant"))?;
    config.reference.validate().map_err(|e| e.nested("reference"))?;
    config.sim.validate().map_err(|e| e.nested("sim"))?;
    config.constraints.validate().map_err(|e| e.nested("constraints"))?;
    config.pso.bounds.validate().map_err(|e| e.nested("pso.bounds"))?;
    config.pso.to_core().validate().map_err(|e| e.nested("pso"))?;
    if let Some(gains) = &config.gains {
        gains.validate().map_err(|e| e.nested("gains"))?;
    }
    if config.constraints.horizon > config.sim.t_final {
        return Err(InvalidParam::new(
            "constraints.horizon",
            format!(
                "must not exceed sim.t_final = {} s, got {} s",
                config.sim.t_final, config.constraints.horizon
            ),
        ));
    }
    Ok(())
}

fn validate_evaluation_config(config: &EvaluationConfig) -> Result<(), InvalidParam> {
    config.reference.validate().map_err(|e| e.nested("reference"))?;
    config.constraints.validate().map_err(|e| e.nested("constraints"))
}

/// Strict JSON parse with field paths in error messages; rejects trailing
/// content after the document.
fn parse_strict<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| e.to_string())?;
    de.end().map_err(|e| e.to_string())?;
    Ok(value)
}

pub fn parse_config(text: &str) -> Result<RunConfig, String> {
    let config: RunConfig = parse_strict(text)?;
    validate_config(&config).map_err(|e| e.to_string())?;
    Ok(config)
}

pub fn parse_evaluation_config(text: &str) -> Result<EvaluationConfig, String> {
    let config: EvaluationConfig = parse_strict(text)?;
    validate_evaluation_config(&config).map_err(|e| e.to_string())?;
    Ok(config)
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    parse_config(&read_file(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_evaluation_config(path: &Path) -> Result<EvaluationConfig, CliError> {
    parse_evaluation_config(&read_file(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
