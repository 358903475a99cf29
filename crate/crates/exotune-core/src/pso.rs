//! Constrained particle-swarm search over the six controller gains.
//!
//! Candidates are compared by feasibility rules rather than a penalty
//! weight: a feasible candidate always beats an infeasible one, two
//! feasible candidates compare by fitness, two infeasible ones by total
//! constraint violation. All comparisons are strict, so an exact tie never
//! displaces an incumbent — this is what makes the feasible global best
//! monotone in fitness across generations.
//!
//! Randomness contract (frozen so results are reproducible across runs,
//! platforms, and thread counts): every random draw comes from a ChaCha8
//! generator keyed by the run seed and a per-use stream id. Particle `p`
//! draws its initial position from stream `p` (six uniforms, one per
//! dimension in order), and its generation-`k` velocity update from stream
//! `((k+1) << 32) | p` (twelve uniforms: the six cognitive draws, then the
//! six social draws). Uniforms take the top 53 bits of `next_u64`, giving
//! values in `[0, 1)`.

use crate::eval::{ConstraintVector, EvalError, Evaluation};
use crate::sim::SimError;
use crate::{require_finite, InvalidParam};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Number of tuned gains.
pub const DIMENSIONS: usize = 6;

/// A point in gain space, ordered `[κ, γ, η₁, η₂, η₃, η₄]`.
pub type Position = [f64; DIMENSIONS];

/// Closed search interval for one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct DimBounds {
    pub min: f64,
    pub max: f64,
}

impl DimBounds {
    pub fn range(&self) -> f64 {
        self.max - self.min
    }

    fn validate(&self, path: &str) -> Result<(), InvalidParam> {
        require_finite(&format!("{path}.min"), self.min)?;
        require_finite(&format!("{path}.max"), self.max)?;
        if self.min >= self.max {
            return Err(InvalidParam::new(
                format!("{path}.min"),
                format!("must be below max, got [{}, {}]", self.min, self.max),
            ));
        }
        Ok(())
    }
}

/// Stock search box for the controller gains: κ ∈ [1, 10], γ ∈ [1, 5],
/// η₁..η₄ ∈ [1, 15].
pub const DEFAULT_GAIN_BOUNDS: [DimBounds; DIMENSIONS] = [
    DimBounds { min: 1.0, max: 10.0 },
    DimBounds { min: 1.0, max: 5.0 },
    DimBounds { min: 1.0, max: 15.0 },
    DimBounds { min: 1.0, max: 15.0 },
    DimBounds { min: 1.0, max: 15.0 },
    DimBounds { min: 1.0, max: 15.0 },
];

/// Swarm hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields, default)
)]
pub struct PsoConfig {
    /// Swarm size N.
    pub particles: usize,
    /// Generations K.
    pub generations: usize,
    /// Cognitive acceleration (pull toward the personal best).
    pub cognitive: f64,
    /// Social acceleration (pull toward the global best).
    pub social: f64,
    /// Inertia weight at the first generation.
    pub inertia_start: f64,
    /// Inertia weight at the last generation.
    pub inertia_end: f64,
    /// Velocity magnitude cap per dimension, as a fraction of that
    /// dimension's range.
    pub velocity_clamp: f64,
    /// Run seed; the sole source of randomness.
    pub seed: u64,
    pub bounds: [DimBounds; DIMENSIONS],
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            particles: 30,
            generations: 30,
            cognitive: 2.0,
            social: 2.0,
            inertia_start: 0.9,
            inertia_end: 0.4,
            velocity_clamp: 0.5,
            seed: 42,
            bounds: DEFAULT_GAIN_BOUNDS,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<(), InvalidParam> {
        if self.particles < 2 {
            return Err(InvalidParam::new(
                "particles",
                format!("need at least 2 particles, got {}", self.particles),
            ));
        }
        if self.particles > u32::MAX as usize {
            return Err(InvalidParam::new("particles", "exceeds the stream id space (2^32)"));
        }
        if self.generations < 1 {
            return Err(InvalidParam::new("generations", "need at least 1 generation"));
        }
        if self.generations > u32::MAX as usize {
            return Err(InvalidParam::new("generations", "exceeds the stream id space (2^32)"));
        }
        for (path, value) in [
            ("cognitive", self.cognitive),
            ("social", self.social),
            ("inertia_start", self.inertia_start),
            ("inertia_end", self.inertia_end),
        ] {
            require_finite(path, value)?;
        }
        if self.cognitive < 0.0 || self.social < 0.0 {
            return Err(InvalidParam::new("cognitive", "acceleration weights must be >= 0"));
        }
        require_finite("velocity_clamp", self.velocity_clamp)?;
        if self.velocity_clamp <= 0.0 {
            return Err(InvalidParam::new(
                "velocity_clamp",
                format!("must be > 0, got {}", self.velocity_clamp),
            ));
        }
        for (i, b) in self.bounds.iter().enumerate() {
            b.validate(&format!("bounds[{i}]"))?;
        }
        Ok(())
    }
}

/// Inertia weight for generation `k` of `generations`, interpolated
/// linearly from `start` (k = 0) to `end` (k = generations − 1).
pub fn inertia_at(k: usize, generations: usize, start: f64, end: f64) -> f64 {
    if generations <= 1 {
        return start;
    }
    start + (end - start) * (k as f64 / (generations - 1) as f64)
}

/// Map 64 random bits to a uniform `f64` in `[0, 1)` using the top 53 bits.
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Stream id for particle `p`'s position initialization.
pub fn init_stream(particle: usize) -> u64 {
    particle as u64
}

/// Stream id for particle `p`'s velocity update at generation `k`.
pub fn update_stream(generation: usize, particle: usize) -> u64 {
    ((generation as u64 + 1) << 32) | particle as u64
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_unit(rng: &mut ChaCha8Rng) -> f64 {
    unit_f64(rng.next_u64())
}

/// One-dimensional velocity rule: inertia-weighted old velocity plus random
/// pulls toward the personal and global bests.
pub fn velocity_update(
    velocity: f64,
    position: f64,
    personal_best: f64,
    global_best: f64,
    inertia: f64,
    cognitive: f64,
    beta1: f64,
    social: f64,
    beta2: f64,
) -> f64 {
    inertia * velocity
        + cognitive * beta1 * (personal_best - position)
        + social * beta2 * (global_best - position)
}

/// A scored position: the unit of comparison for the feasibility rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incumbent {
    pub position: Position,
    pub fitness: f64,
    pub constraints: ConstraintVector,
}

impl Incumbent {
    pub fn from_evaluation(position: Position, evaluation: &Evaluation) -> Self {
        Self { position, fitness: evaluation.fitness, constraints: evaluation.constraints }
    }

    pub fn feasible(&self) -> bool {
        self.constraints.is_feasible()
    }

    pub fn violation(&self) -> f64 {
        self.constraints.total_violation()
    }
}

/// Strict feasibility-first comparison: does `candidate` beat `incumbent`?
///
/// Feasible beats infeasible; among feasible, strictly lower fitness wins;
/// among infeasible, strictly lower total violation wins. Ties lose.
pub fn improves(candidate: &Incumbent, incumbent: &Incumbent) -> bool {
    match (candidate.feasible(), incumbent.feasible()) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => candidate.fitness < incumbent.fitness,
        (false, false) => candidate.violation() < incumbent.violation(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub position: Position,
    pub velocity: [f64; DIMENSIONS],
    /// Personal best.
    pub best: Incumbent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    /// Global best across all particles and generations so far.
    pub best: Incumbent,
}

/// Candidate scoring failure.
#[derive(Debug, Clone, PartialEq)]
pub enum EvaluatorError {
    Sim(SimError),
    Eval(EvalError),
    Message(String),
}

impl fmt::Display for EvaluatorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Sim(e) => write!(f, "{e}"),
            Self::Eval(e) => write!(f, "{e}"),
            Self::Message(m) => write!(f, "{m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EvaluatorError {}

impl From<SimError> for EvaluatorError {
    fn from(e: SimError) -> Self {
        Self::Sim(e)
    }
}

impl From<EvalError> for EvaluatorError {
    fn from(e: EvalError) -> Self {
        Self::Eval(e)
    }
}

/// Scores candidate positions. `Sync` so batches may be fanned out across
/// threads; determinism is unaffected because results are consumed in
/// particle-index order.
pub trait Evaluator: Sync {
    fn evaluate(&self, position: &Position) -> Result<Evaluation, EvaluatorError>;

    /// Score a whole generation. The default runs sequentially; parallel
    /// implementations must preserve input order.
    fn evaluate_batch(&self, positions: &[Position]) -> Vec<Result<Evaluation, EvaluatorError>> {
        positions.iter().map(|p| self.evaluate(p)).collect()
    }
}

/// Search failure.
#[derive(Debug, Clone, PartialEq)]
pub enum PsoError {
    InvalidConfig(InvalidParam),
    /// Scoring failed; `generation` 0 is initialization, `k ≥ 1` the k-th
    /// velocity/position update.
    Evaluator { generation: usize, particle: usize, source: EvaluatorError },
}

impl fmt::Display for PsoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidConfig(e) => write!(f, "invalid swarm configuration: {e}"),
            Self::Evaluator { generation, particle, source } => write!(
                f,
                "evaluation failed at generation {generation}, particle {particle}: {source}"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PsoError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Self::InvalidConfig(e) => Some(e),
            Self::Evaluator { source, .. } => Some(source),
        }
    }
}

impl From<InvalidParam> for PsoError {
    fn from(e: InvalidParam) -> Self {
        Self::InvalidConfig(e)
    }
}

/// Global-best fitness and violation after a generation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HistoryEntry {
    pub fitness: f64,
    pub violation: f64,
}

/// Outcome of a full search. `feasible = false` is a legitimate result (the
/// swarm never found a constraint-satisfying candidate), not an error.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptimizationResult {
    pub best_position: Position,
    pub best_fitness: f64,
    pub best_violation: f64,
    pub best_constraints: ConstraintVector,
    pub feasible: bool,
    /// One entry per generation, recorded after that generation's update.
    pub history: Vec<HistoryEntry>,
    pub generations_run: usize,
    pub seed: u64,
}

/// Draw initial positions (uniform within bounds, zero velocities) and
/// score them. Evaluation errors carry generation 0.
pub fn init_swarm<E: Evaluator + ?Sized>(
    config: &PsoConfig,
    evaluator: &E,
) -> Result<Swarm, PsoError> {
    let mut positions = Vec::with_capacity(config.particles);
    for p in 0..config.particles {
        let mut rng = stream_rng(config.seed, init_stream(p));
        let mut x = [0.0; DIMENSIONS];
        for (i, b) in config.bounds.iter().enumerate() {
            x[i] = b.min + draw_unit(&mut rng) * b.range();
        }
        positions.push(x);
    }

    let results = evaluator.evaluate_batch(&positions);
    debug_assert_eq!(results.len(), positions.len(), "evaluator must preserve batch length");
    let mut particles = Vec::with_capacity(config.particles);
    for (p, (position, result)) in positions.iter().zip(results).enumerate() {
        let evaluation =
            result.map_err(|source| PsoError::Evaluator { generation: 0, particle: p, source })?;
        particles.push(Particle {
            position: *position,
            velocity: [0.0; DIMENSIONS],
            best: Incumbent::from_evaluation(*position, &evaluation),
        });
    }

    let mut best = particles[0].best;
    for particle in &particles[1..] {
        if improves(&particle.best, &best) {
            best = particle.best;
        }
    }
    Ok(Swarm { particles, best })
}

/// Advance the swarm by one generation (`k` counts from 0). The global best
/// is frozen for the whole move phase; personal and global bests are then
/// updated in particle-index order. Evaluation errors carry `k + 1`.
pub fn pso_step<E: Evaluator + ?Sized>(
    swarm: &mut Swarm,
    k: usize,
    config: &PsoConfig,
    evaluator: &E,
) -> Result<(), PsoError> {
    let w = inertia_at(k, config.generations, config.inertia_start, config.inertia_end);
    let gbest = swarm.best.position;

    for (p, particle) in swarm.particles.iter_mut().enumerate() {
        let mut rng = stream_rng(config.seed, update_stream(k, p));
        let mut beta1 = [0.0; DIMENSIONS];
        let mut beta2 = [0.0; DIMENSIONS];
        for b in &mut beta1 {
            *b = draw_unit(&mut rng);
        }
        for b in &mut beta2 {
            *b = draw_unit(&mut rng);
        }
        for i in 0..DIMENSIONS {
            let b = &config.bounds[i];
            let mut v = velocity_update(
                particle.velocity[i],
                particle.position[i],
                particle.best.position[i],
                gbest[i],
                w,
                config.cognitive,
                beta1[i],
                config.social,
                beta2[i],
            );
            let mut x = particle.position[i] + v;
            if x < b.min {
                x = b.min;
                v = 0.0;
            } else if x > b.max {
                x = b.max;
                v = 0.0;
            }
            let v_max = config.velocity_clamp * b.range();
            particle.position[i] = x;
            particle.velocity[i] = v.clamp(-v_max, v_max);
        }
    }

    let positions: Vec<Position> = swarm.particles.iter().map(|p| p.position).collect();
    let results = evaluator.evaluate_batch(&positions);
    debug_assert_eq!(results.len(), positions.len(), "evaluator must preserve batch length");
    for (p, result) in results.into_iter().enumerate() {
        let evaluation = result
            .map_err(|source| PsoError::Evaluator { generation: k + 1, particle: p, source })?;
        let candidate = Incumbent::from_evaluation(swarm.particles[p].position, &evaluation);
        if improves(&candidate, &swarm.particles[p].best) {
            swarm.particles[p].best = candidate;
        }
        if improves(&swarm.particles[p].best, &swarm.best) {
            swarm.best = swarm.particles[p].best;
        }
    }
    Ok(())
}

/// Run the full search: initialize, iterate `generations` times, and report
/// the global best with its per-generation history.
pub fn optimize<E: Evaluator + ?Sized>(
    config: &PsoConfig,
    evaluator: &E,
) -> Result<OptimizationResult, PsoError> {
    config.validate()?;
    let mut swarm = init_swarm(config, evaluator)?;
    let mut history = Vec::with_capacity(config.generations);
    for k in 0..config.generations {
        pso_step(&mut swarm, k, config, evaluator)?;
        history.push(HistoryEntry {
            fitness: swarm.best.fitness,
            violation: swarm.best.violation(),
        });
    }
    Ok(OptimizationResult {
        best_position: swarm.best.position,
        best_fitness: swarm.best.fitness,
        best_violation: swarm.best.violation(),
        best_constraints: swarm.best.constraints,
        feasible: swarm.best.feasible(),
        history,
        generations_run: config.generations,
        seed: config.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::sync::atomic::{AtomicUsize, Ordering};
    use proptest::prelude::*;

    /// Shifted sphere: smooth, unconstrained, minimum `center`.
    struct Sphere {
        center: Position,
    }

    impl Sphere {
        fn centered(c: f64) -> Self {
            Self { center: [c; DIMENSIONS] }
        }
    }

    impl Evaluator for Sphere {
        fn evaluate(&self, position: &Position) -> Result<Evaluation, EvaluatorError> {
            let fitness = position
                .iter()
                .zip(self.center.iter())
                .map(|(x, c)| (x - c) * (x - c))
                .sum();
            Ok(Evaluation { fitness, constraints: ConstraintVector::UNCONSTRAINED })
        }
    }

    /// Sphere whose first constraint never clears.
    struct Hopeless;

    impl Evaluator for Hopeless {
        fn evaluate(&self, position: &Position) -> Result<Evaluation, EvaluatorError> {
            let fitness: f64 = position.iter().map(|x| x * x).sum();
            Ok(Evaluation {
                fitness,
                constraints: ConstraintVector([0.5 + fitness, 0.0, 0.0, 0.0, 0.0]),
            })
        }
    }

    /// Errors out on the n-th call (0-based), counting across batches.
    struct FailsAtCall {
        n: usize,
        calls: AtomicUsize,
    }

    impl Evaluator for FailsAtCall {
        fn evaluate(&self, position: &Position) -> Result<Evaluation, EvaluatorError> {
            let call = self.calls.fetch_add(1, Ordering::SeqCst);
            if call == self.n {
                return Err(EvaluatorError::Message(String::from("synthetic failure")));
            }
            Sphere::centered(0.0).evaluate(position)
        }
    }

    fn box_bounds(min: f64, max: f64) -> [DimBounds; DIMENSIONS] {
        [DimBounds { min, max }; DIMENSIONS]
    }

    fn sphere_config(particles: usize, generations: usize, seed: u64) -> PsoConfig {
        PsoConfig { particles, generations, seed, bounds: box_bounds(-5.0, 5.0), ..PsoConfig::default() }
    }

    #[test]
    fn inertia_interpolates_linearly() {
        assert_eq!(inertia_at(0, 30, 0.9, 0.4), 0.9, "first generation uses the start weight");
        assert_eq!(inertia_at(29, 30, 0.9, 0.4), 0.4, "last generation uses the end weight");
        assert_eq!(inertia_at(15, 31, 0.9, 0.4), 0.65, "midpoint weight is the average");
        assert_eq!(inertia_at(0, 1, 0.9, 0.4), 0.9, "single generation degenerates to start");
    }

    #[test]
    fn velocity_update_hand_example() {
        // 0.5·2 + 2·0.5·(1−0) + 2·0.5·(1−0) = 3.
        let v = velocity_update(2.0, 0.0, 1.0, 1.0, 0.5, 2.0, 0.5, 2.0, 0.5);
        assert_eq!(v, 3.0);
    }

    #[test]
    fn velocity_update_fixed_point() {
        // At rest on both bests, the particle stays put regardless of draws.
        let v = velocity_update(0.0, 2.5, 2.5, 2.5, 0.7, 2.0, 0.9, 2.0, 0.3);
        assert_eq!(v, 0.0, "consensus point must be stationary");
    }

    #[test]
    fn unit_f64_hits_range_edges() {
        assert_eq!(unit_f64(0), 0.0);
        assert_eq!(unit_f64(1 << 11), f64::powi(2.0, -53));
        let top = unit_f64(u64::MAX);
        assert!(top < 1.0, "unit draw must stay below 1, got {top}");
        assert_eq!(top, (f64::powi(2.0, 53) - 1.0) * f64::powi(2.0, -53));
    }

    #[test]
    fn stream_ids_are_disjoint() {
        assert_eq!(init_stream(7), 7);
        assert_eq!(update_stream(0, 3), (1u64 << 32) | 3);
        assert_eq!(update_stream(2, 0), 3u64 << 32);
        assert_ne!(update_stream(0, 1), update_stream(1, 0), "generation and particle must not alias");
    }

    #[test]
    fn improves_follows_feasibility_rules() {
        let feas = |fitness: f64| Incumbent {
            position: [0.0; DIMENSIONS],
            fitness,
            constraints: ConstraintVector::UNCONSTRAINED,
        };
        let infeas = |fitness: f64, violation: f64| Incumbent {
            position: [0.0; DIMENSIONS],
            fitness,
            constraints: ConstraintVector([violation, 0.0, 0.0, 0.0, 0.0]),
        };
        assert!(improves(&feas(9.0), &infeas(0.1, 0.1)), "feasible must beat infeasible");
        assert!(!improves(&infeas(0.1, 0.1), &feas(9.0)), "infeasible must not beat feasible");
        assert!(improves(&feas(1.0), &feas(2.0)), "lower fitness wins among feasible");
        assert!(!improves(&feas(2.0), &feas(1.0)));
        assert!(!improves(&feas(1.0), &feas(1.0)), "exact fitness tie must not displace");
        assert!(improves(&infeas(5.0, 0.1), &infeas(1.0, 0.2)), "lower violation wins among infeasible");
        assert!(!improves(&infeas(1.0, 0.2), &infeas(5.0, 0.1)));
        assert!(!improves(&infeas(1.0, 0.2), &infeas(5.0, 0.2)), "exact violation tie must not displace");
    }

    #[test]
    fn init_positions_follow_the_stream_contract() {
        let config = sphere_config(4, 3, 99);
        let swarm = init_swarm(&config, &Sphere::centered(0.0)).unwrap();
        let mut rng = stream_rng(99, init_stream(3));
        let mut expected = [0.0; DIMENSIONS];
        for (i, b) in config.bounds.iter().enumerate() {
            expected[i] = b.min + draw_unit(&mut rng) * b.range();
        }
        assert_eq!(
            swarm.particles[3].position, expected,
            "particle 3 must draw exactly from its own stream"
        );
        assert_eq!(swarm.particles[3].velocity, [0.0; DIMENSIONS], "initial velocities are zero");
    }

    #[test]
    fn first_step_matches_manual_recomputation() {
        let config = sphere_config(3, 5, 7);
        let sphere = Sphere::centered(1.0);
        let mut swarm = init_swarm(&config, &sphere).unwrap();
        let before = swarm.particles[1];
        let gbest = swarm.best.position;
        pso_step(&mut swarm, 0, &config, &sphere).unwrap();

        let mut rng = stream_rng(7, update_stream(0, 1));
        let mut beta = [0.0; 2 * DIMENSIONS];
        for b in &mut beta {
            *b = draw_unit(&mut rng);
        }
        let w = inertia_at(0, 5, 0.9, 0.4);
        for i in 0..DIMENSIONS {
            let mut v = velocity_update(
                before.velocity[i],
                before.position[i],
                before.best.position[i],
                gbest[i],
                w,
                2.0,
                beta[i],
                2.0,
                beta[DIMENSIONS + i],
            );
            let mut x = before.position[i] + v;
            if x < -5.0 {
                x = -5.0;
                v = 0.0;
            } else if x > 5.0 {
                x = 5.0;
                v = 0.0;
            }
            v = v.clamp(-5.0, 5.0);
            assert_eq!(swarm.particles[1].position[i], x, "position dim {i} diverged from contract");
            assert_eq!(swarm.particles[1].velocity[i], v, "velocity dim {i} diverged from contract");
        }
    }

    #[test]
    fn optimize_is_bitwise_deterministic() {
        let config = sphere_config(6, 8, 123);
        let a = optimize(&config, &Sphere::centered(1.5)).unwrap();
        let b = optimize(&config, &Sphere::centered(1.5)).unwrap();
        assert_eq!(a, b, "same config and seed must reproduce the result exactly");
        assert_eq!(a.history.len(), a.generations_run, "one history entry per generation");
    }

    #[test]
    fn sphere_converges_near_the_center() {
        let config = PsoConfig {
            particles: 30,
            generations: 100,
            bounds: box_bounds(-5.0, 5.0),
            ..PsoConfig::default()
        };
        let result = optimize(&config, &Sphere::centered(0.0)).unwrap();
        assert!(result.feasible);
        assert!(
            result.best_fitness <= 1e-3,
            "swarm stalled at fitness {}", result.best_fitness
        );
    }

    #[test]
    fn feasible_history_is_monotone() {
        let config = sphere_config(8, 40, 1);
        let result = optimize(&config, &Sphere::centered(2.0)).unwrap();
        for pair in result.history.windows(2) {
            assert!(
                pair[1].fitness <= pair[0].fitness,
                "feasible best worsened from {} to {}", pair[0].fitness, pair[1].fitness
            );
        }
        assert_eq!(result.best_fitness, result.history.last().unwrap().fitness);
    }

    #[test]
    fn infeasible_search_reports_rather_than_errors() {
        let config = sphere_config(5, 6, 11);
        let result = optimize(&config, &Hopeless).unwrap();
        assert!(!result.feasible, "no candidate can satisfy the hopeless constraint");
        assert!(result.best_violation > 0.0);
        assert_eq!(result.history.len(), 6, "history must still cover every generation");
        for pair in result.history.windows(2) {
            assert!(pair[1].violation <= pair[0].violation, "violation must not worsen");
        }
    }

    #[test]
    fn evaluator_failure_carries_generation_and_particle() {
        // 5 init calls, then the step batch: call 5+2 fails → generation 1,
        // particle 2.
        let config = sphere_config(5, 3, 4);
        let failing = FailsAtCall { n: 7, calls: AtomicUsize::new(0) };
        match optimize(&config, &failing) {
            Err(PsoError::Evaluator { generation, particle, source }) => {
                assert_eq!((generation, particle), (1, 2));
                assert_eq!(source, EvaluatorError::Message(String::from("synthetic failure")));
            }
            other => panic!("expected a located evaluator error, got {other:?}"),
        }

        let failing_early = FailsAtCall { n: 0, calls: AtomicUsize::new(0) };
        match optimize(&config, &failing_early) {
            Err(PsoError::Evaluator { generation, particle, .. }) => {
                assert_eq!((generation, particle), (0, 0), "init failures report generation 0");
            }
            other => panic!("expected a located evaluator error, got {other:?}"),
        }
    }

    #[test]
    fn config_validation_names_the_offending_field() {
        let bad = PsoConfig { particles: 1, ..PsoConfig::default() };
        assert_eq!(bad.validate().unwrap_err().path, "particles");
        let bad = PsoConfig { generations: 0, ..PsoConfig::default() };
        assert_eq!(bad.validate().unwrap_err().path, "generations");
        let bad = PsoConfig { velocity_clamp: 0.0, ..PsoConfig::default() };
        assert_eq!(bad.validate().unwrap_err().path, "velocity_clamp");
        let mut bad = PsoConfig::default();
        bad.bounds[2] = DimBounds { min: 3.0, max: 3.0 };
        assert_eq!(bad.validate().unwrap_err().path, "bounds[2].min");
        let bad = PsoConfig { inertia_start: f64::NAN, ..PsoConfig::default() };
        assert_eq!(bad.validate().unwrap_err().path, "inertia_start");
    }

    proptest! {
        /// No particle ever leaves the box, and no velocity ever exceeds the
        /// per-dimension cap, at any generation.
        #[test]
        fn swarm_respects_bounds_and_velocity_caps(seed in 0u64..1_000_000, steps in 1usize..12) {
            let config = sphere_config(4, steps, seed);
            let sphere = Sphere::centered(4.9); // optimum near the box edge
            let mut swarm = init_swarm(&config, &sphere).unwrap();
            for k in 0..steps {
                pso_step(&mut swarm, k, &config, &sphere).unwrap();
                for particle in &swarm.particles {
                    for i in 0..DIMENSIONS {
                        prop_assert!(
                            (-5.0..=5.0).contains(&particle.position[i]),
                            "position {} escaped the box", particle.position[i]
                        );
                        prop_assert!(
                            particle.velocity[i].abs() <= 5.0,
                            "velocity {} exceeded the cap", particle.velocity[i]
                        );
                    }
                }
            }
        }

        /// The reported best never loses to any particle's personal best.
        #[test]
        fn global_best_dominates_personal_bests(seed in 0u64..1_000_000) {
            let config = sphere_config(5, 4, seed);
            let sphere = Sphere::centered(-1.0);
            let mut swarm = init_swarm(&config, &sphere).unwrap();
            for k in 0..4 {
                pso_step(&mut swarm, k, &config, &sphere).unwrap();
            }
            for particle in &swarm.particles {
                prop_assert!(!improves(&particle.best, &swarm.best));
            }
        }
    }

    #[cfg(feature = "serde")]
    mod serde_tests {
        use super::*;

        #[test]
        fn config_roundtrips_through_json() {
            let config = PsoConfig::default();
            let json = serde_json::to_string(&config).unwrap();
            let back: PsoConfig = serde_json::from_str(&json).unwrap();
            assert_eq!(config, back);
        }

        #[test]
        fn result_serializes_with_full_history() {
            let result = optimize(&sphere_config(4, 3, 2), &Sphere::centered(0.5)).unwrap();
            let json = serde_json::to_string(&result).unwrap();
            let back: OptimizationResult = serde_json::from_str(&json).unwrap();
            assert_eq!(result, back);
        }
    }
}
