//! Thread-pooled candidate scoring.

use exotune_core::eval::Evaluation;
use exotune_core::pso::{Evaluator, EvaluatorError, Position};
use rayon::prelude::*;

/// Wraps any evaluator and fans `evaluate_batch` across rayon's thread pool.
///
/// Order is preserved (indexed collect), and the swarm's random draws never
/// depend on evaluation timing, so results are bit-identical to sequential
/// evaluation at any thread count.
pub struct ParallelEvaluator<E>(pub E);

impl<E: Evaluator> Evaluator for ParallelEvaluator<E> {
    fn evaluate(&self, position: &Position) -> Result<Evaluation, EvaluatorError> {
        self.0.evaluate(position)
    }

    fn evaluate_batch(&self, positions: &[Position]) -> Vec<Result<Evaluation, EvaluatorError>> {
        positions.par_iter().map(|p| self.0.evaluate(p)).collect()
    }
}
