//! Automatic design: iterated racing over machines and elitist evolution of
//! network weights, both bound by a strict episode budget.

mod budget;
mod evolve;
mod race;

use rayon::prelude::*;

use crate::controller::Controller;
use crate::missions::{ObjectiveSense, ScenarioSpec};
use crate::sim::run_episode;

pub use budget::Budget;
pub use evolve::{evolve, EvoHistory, EvoOutcome, EvoSettings};
pub use race::{iterated_race, RaceHistory, RaceOutcome, RaceSettings};

/// Scores a candidate on one instance (episode seed).
pub trait Evaluator<C>: Sync {
    fn evaluate(&self, candidate: &C, seed: u64) -> f64;
    fn sense(&self) -> ObjectiveSense;
}

/// Evaluates shepherd controllers by running simulated episodes.
#[derive(Debug, Clone)]
pub struct SimEvaluator {
    pub scenario: ScenarioSpec,
}

impl SimEvaluator {
    pub fn new(scenario: ScenarioSpec) -> Self {
        Self { scenario }
    }
}

impl<C: Controller> Evaluator<C> for SimEvaluator {
    fn evaluate(&self, candidate: &C, seed: u64) -> f64 {
        match run_episode(&self.scenario, candidate, seed) {
            Ok(r) => r.objective,
            Err(_) => self.scenario.worst_objective(),
        }
    }

    fn sense(&self) -> ObjectiveSense {
        self.scenario.sense()
    }
}

/// Runs already-charged evaluation jobs, possibly in parallel; the output
/// order matches `jobs`.
pub(crate) fn evaluate_jobs<C: Sync, E: Evaluator<C>>(
    evaluator: &E,
    candidates: &[C],
    jobs: &[(usize, u64)],
) -> Vec<f64> {
    jobs.par_iter()
        .map(|&(c, seed)| evaluator.evaluate(&candidates[c], seed))
        .collect()
}

/// Episode seeds drawn during design have the top bit clear; assessment
/// seeds have it set, so the two sets never meet.
pub const ASSESSMENT_SEED_BIT: u64 = 1 << 63;

#[inline]
pub(crate) fn design_seed(raw: u64) -> u64 {
    raw & !ASSESSMENT_SEED_BIT
}
