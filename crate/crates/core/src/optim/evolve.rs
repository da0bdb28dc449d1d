//! Elitist evolution of network weights.
//!
//! Every generation all individuals share the same fresh episode seeds, the
//! elites pass unchanged and the rest of the population is refilled with
//! mutated copies of uniformly chosen elites.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::missions::ObjectiveSense;
use crate::nn::{mutate_genome, NnGenome};
use crate::rng::RngStream;

use super::{design_seed, evaluate_jobs, Budget, Evaluator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvoSettings {
    pub population: usize,
    pub elites: usize,
    pub episodes_per_individual: usize,
}

impl Default for EvoSettings {
    fn default() -> Self {
        Self {
            population: 100,
            elites: 20,
            episodes_per_individual: 10,
        }
    }
}

impl EvoSettings {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 || self.episodes_per_individual == 0 {
            return Err(Error::InvalidConfig("population and episodes must be positive".into()));
        }
        if self.elites == 0 || self.elites > self.population {
            return Err(Error::InvalidConfig(format!(
                "elites must be in 1..={}, got {}",
                self.population, self.elites
            )));
        }
        Ok(())
    }

    pub fn episodes_per_generation(&self) -> u64 {
        (self.population * self.episodes_per_individual) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvoHistory {
    pub generation: usize,
    pub consumed: u64,
    pub generation_best: f64,
    pub generation_mean: f64,
    pub best_ever: f64,
}

#[derive(Debug, Clone)]
pub struct EvoOutcome {
    pub best: NnGenome,
    /// Mean objective of `best` when it was evaluated; `None` if nothing
    /// could be evaluated.
    pub best_fitness: Option<f64>,
    pub generations: usize,
    pub consumed: u64,
    pub history: Vec<EvoHistory>,
}

/// Indices of `fitness` ordered best first; ties keep the lower index.
pub fn rank_population(fitness: &[f64], sense: ObjectiveSense) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| sense.cost(fitness[a]).total_cmp(&sense.cost(fitness[b])).then(a.cmp(&b)));
    order
}

/// Builds the next population: the top `elites` unchanged, then offspring.
pub fn next_generation(
    population: &[NnGenome],
    fitness: &[f64],
    sense: ObjectiveSense,
    settings: &EvoSettings,
    rng: &mut RngStream,
) -> Vec<NnGenome> {
    let order = rank_population(fitness, sense);
    let n_elites = settings.elites.min(order.len());
    let mut next: Vec<NnGenome> = order[..n_elites].iter().map(|&i| population[i].clone()).collect();
    while next.len() < settings.population {
        let parent = order[rng.index(n_elites)];
        next.push(mutate_genome(&population[parent], rng));
    }
    next
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Scores `individuals` on `episodes` shared seeds each.
fn score<E: Evaluator<NnGenome>>(
    evaluator: &E,
    individuals: &[NnGenome],
    episodes: usize,
    budget: &mut Budget,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    budget.charge((individuals.len() * episodes) as u64)?;
    let seeds: Vec<u64> = (0..episodes).map(|_| design_seed(rng.next_u64())).collect();
    let jobs: Vec<(usize, u64)> = (0..individuals.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    let raw = evaluate_jobs(evaluator, individuals, &jobs);
    Ok(raw.chunks(episodes).map(mean).collect())
}

/// Evolves network weights until the budget cannot pay for another
/// generation. If not even one generation fits, a truncated population is
/// scored with whatever the budget allows.
pub fn evolve<E: Evaluator<NnGenome>>(
    evaluator: &E,
    budget: &mut Budget,
    rng: &mut RngStream,
    settings: &EvoSettings,
) -> Result<EvoOutcome> {
    settings.validate()?;
    let sense = evaluator.sense();
    let per_gen = settings.episodes_per_generation();
    let mut population: Vec<NnGenome> = (0..settings.population).map(|_| NnGenome::random(rng)).collect();
    let mut best: Option<(NnGenome, f64)> = None;
    let mut history = Vec::new();
    let mut generation = 0usize;

    let consider = |pop: &[NnGenome], fit: &[f64], best: &mut Option<(NnGenome, f64)>| {
        let top = rank_population(fit, sense)[0];
        let improved = match best {
            None => true,
            Some((_, f)) => sense.better(fit[top], *f),
        };
        if improved {
            *best = Some((pop[top].clone(), fit[top]));
        }
        fit[top]
    };

    while budget.can_afford(per_gen) && per_gen > 0 {
        let fitness = score(evaluator, &population, settings.episodes_per_individual, budget, rng)?;
        let gen_best = consider(&population, &fitness, &mut best);
        generation += 1;
        history.push(EvoHistory {
            generation,
            consumed: budget.consumed(),
            generation_best: gen_best,
            generation_mean: mean(&fitness),
            best_ever: best.as_ref().map(|b| b.1).unwrap_or(f64::NAN),
        });
        population = next_generation(&population, &fitness, sense, settings, rng);
    }

    if generation == 0 && budget.remaining() > 0 {
        let remaining = budget.remaining() as usize;
        let (n, episodes) = if remaining >= settings.episodes_per_individual {
            (remaining / settings.episodes_per_individual, settings.episodes_per_individual)
        } else {
            (remaining.min(settings.population), 1)
        };
        let fitness = score(evaluator, &population[..n], episodes, budget, rng)?;
        consider(&population[..n], &fitness, &mut best);
    }

    let best_fitness = best.as_ref().map(|b| b.1);
    let best = best.map(|b| b.0).unwrap_or_else(|| population[0].clone());
    Ok(EvoOutcome {
        best,
        best_fitness,
        generations: generation,
        consumed: budget.consumed(),
        history,
    })
}
