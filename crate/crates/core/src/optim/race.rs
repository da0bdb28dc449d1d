//! Iterated racing over machine configurations.
//!
//! Each iteration builds a generation (uniform samples first, then elites
//! plus mutated offspring of elites) and races it over a shared, growing list
//! of instance seeds. Every candidate is scored on the same instances, so
//! the scores form blocks for the Friedman test. Elites keep their results,
//! so re-racing them on known instances is free.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::missions::ObjectiveSense;
use crate::pfsm::{mutate_pfsm, sample_pfsm, PfsmConfig};
use crate::rng::RngStream;
use crate::stats::{friedman_eliminate, friedman_test};

use super::{design_seed, evaluate_jobs, Budget, Evaluator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceSettings {
    /// Candidates per iteration; derived from the per-iteration budget when
    /// unset.
    pub generation_size: Option<usize>,
    /// Number of iterations the budget is split over.
    pub iterations: usize,
    /// Instances completed before the first statistical test.
    pub first_test: usize,
    pub alpha: f64,
    /// Configurations included in the first generation.
    #[serde(default)]
    pub initial: Vec<PfsmConfig>,
}

impl Default for RaceSettings {
    fn default() -> Self {
        Self {
            generation_size: None,
            iterations: 8,
            first_test: 5,
            alpha: 0.05,
            initial: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceHistory {
    pub iteration: usize,
    pub candidates: usize,
    pub survivors: usize,
    pub instances: usize,
    pub consumed: u64,
    /// Mean objective of this iteration's winner over its instances.
    pub winner_mean: f64,
    /// Best winner mean seen up to this iteration.
    pub best_mean: f64,
}

#[derive(Debug, Clone)]
pub struct RaceOutcome {
    pub best: PfsmConfig,
    /// Mean objective of `best` over every instance it was evaluated on.
    pub best_mean: f64,
    pub consumed: u64,
    pub history: Vec<RaceHistory>,
}

#[derive(Debug, Clone)]
struct Candidate {
    config: PfsmConfig,
    /// Objective on instances `0..results.len()`.
    results: Vec<f64>,
}

impl Candidate {
    fn new(config: PfsmConfig) -> Self {
        Self {
            config,
            results: Vec::new(),
        }
    }

    fn mean(&self) -> f64 {
        if self.results.is_empty() {
            f64::NAN
        } else {
            self.results.iter().sum::<f64>() / self.results.len() as f64
        }
    }
}

/// Orders alive candidates best first by Friedman rank sum over the
/// instances they all completed; ties fall back to mean cost, then index.
fn rank_alive(cands: &[Candidate], alive: &[usize], sense: ObjectiveSense) -> Vec<usize> {
    let common = alive.iter().map(|&c| cands[c].results.len()).min().unwrap_or(0);
    let mut order = alive.to_vec();
    if alive.len() < 2 || common == 0 {
        return order;
    }
    let blocks: Vec<Vec<f64>> = (0..common)
        .map(|i| alive.iter().map(|&c| sense.cost(cands[c].results[i])).collect())
        .collect();
    let test = friedman_test(&blocks).expect("well-formed blocks");
    let mean_cost = |c: usize| {
        cands[c].results[..common].iter().map(|&v| sense.cost(v)).sum::<f64>() / common as f64
    };
    let mut keyed: Vec<(f64, f64, usize)> = alive
        .iter()
        .enumerate()
        .map(|(pos, &c)| (test.rank_sums[pos], mean_cost(c), c))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    order.clear();
    order.extend(keyed.into_iter().map(|k| k.2));
    order
}

/// Rank-weighted choice of a parent among `n` ranked elites.
fn pick_parent(n: usize, rng: &mut RngStream) -> usize {
    let total = n * (n + 1) / 2;
    let mut ticket = rng.index(total);
    for i in 0..n {
        let w = n - i;
        if ticket < w {
            return i;
        }
        ticket -= w;
    }
    n - 1
}

struct RaceResult {
    ranked: Vec<usize>,
    completed: usize,
}

/// Races `cands` until few survive or the allotment runs out.
#[allow(clippy::too_many_arguments)]
fn race<E: Evaluator<PfsmConfig>>(
    evaluator: &E,
    cands: &mut [Candidate],
    instances: &mut Vec<u64>,
    allotment: u64,
    budget: &mut Budget,
    settings: &RaceSettings,
    rng: &mut RngStream,
) -> Result<RaceResult> {
    let sense = evaluator.sense();
    let mut alive: Vec<usize> = (0..cands.len()).collect();
    let stop_at = (cands.len() / 4).max(2);
    let mut spent = 0u64;
    let mut k = 0usize;
    loop {
        if k == instances.len() {
            instances.push(design_seed(rng.next_u64()));
        }
        let pending: Vec<usize> = alive
            .iter()
            .copied()
            .filter(|&c| cands[c].results.len() == k)
            .collect();
        let cost = pending.len() as u64;
        if cost > 0 {
            if spent + cost > allotment || !budget.can_afford(cost) {
                break;
            }
            budget.charge(cost)?;
            spent += cost;
            let configs: Vec<PfsmConfig> = pending.iter().map(|&c| cands[c].config.clone()).collect();
            let jobs: Vec<(usize, u64)> = (0..pending.len()).map(|j| (j, instances[k])).collect();
            let scores = evaluate_jobs(evaluator, &configs, &jobs);
            for (&c, s) in pending.iter().zip(scores) {
                cands[c].results.push(s);
            }
        }
        k += 1;
        if k >= settings.first_test && alive.len() > 1 {
            let matrix: Vec<Vec<f64>> = alive.iter().map(|&c| cands[c].results[..k].to_vec()).collect();
            let keep = friedman_eliminate(&matrix, settings.alpha, sense)?;
            alive = keep.into_iter().map(|i| alive[i]).collect();
            if alive.len() <= stop_at {
                break;
            }
        }
        if spent >= allotment {
            break;
        }
    }
    let completed = alive.iter().map(|&c| cands[c].results.len()).min().unwrap_or(0);
    Ok(RaceResult {
        ranked: rank_alive(cands, &alive, sense),
        completed,
    })
}

/// Searches the machine space with iterated racing and returns the best
/// machine found before the budget ran out.
pub fn iterated_race<E: Evaluator<PfsmConfig>>(
    evaluator: &E,
    budget: &mut Budget,
    rng: &mut RngStream,
    settings: &RaceSettings,
) -> Result<RaceOutcome> {
    let sense = evaluator.sense();
    let mut instances: Vec<u64> = Vec::new();
    let mut elites: Vec<Candidate> = Vec::new();
    let mut history: Vec<RaceHistory> = Vec::new();
    let mut best_mean = f64::NAN;
    let mut iteration = 0usize;

    while budget.remaining() > 0 {
        iteration += 1;
        let left_iters = settings.iterations.saturating_sub(iteration - 1).max(1) as u64;
        let allotment = budget.remaining() / left_iters;
        let size = settings.generation_size.unwrap_or_else(|| {
            (allotment / (settings.first_test + iteration.min(5)) as u64) as usize
        });
        let n_new = size.saturating_sub(elites.len());
        if n_new == 0 || allotment < (n_new * settings.first_test) as u64 {
            break;
        }

        let mut cands: Vec<Candidate> = elites.clone();
        if elites.is_empty() {
            for c in settings.initial.iter().take(size) {
                cands.push(Candidate::new(c.clone()));
            }
            while cands.len() < size {
                cands.push(Candidate::new(sample_pfsm(rng)));
            }
        } else {
            for _ in 0..n_new {
                let parent = pick_parent(elites.len(), rng);
                cands.push(Candidate::new(mutate_pfsm(&elites[parent].config, rng)));
            }
        }
        let n_cands = cands.len();
        let result = race(evaluator, &mut cands, &mut instances, allotment, budget, settings, rng)?;

        let keep = (n_cands / 4).max(2);
        let newcomers_qualified = result.completed >= settings.first_test || elites.is_empty();
        if newcomers_qualified && !result.ranked.is_empty() {
            elites = result.ranked.iter().take(keep).map(|&c| cands[c].clone()).collect();
        } else {
            // newcomers could not be raced far enough; keep the old elites
            // with whatever extra results they gathered
            let n_old = elites.len();
            elites = cands.into_iter().take(n_old).collect();
        }
        let Some(winner) = elites.first() else { break };
        let winner_mean = winner.mean();
        if best_mean.is_nan() || sense.better(winner_mean, best_mean) {
            best_mean = winner_mean;
        }
        history.push(RaceHistory {
            iteration,
            candidates: n_cands,
            survivors: result.ranked.len(),
            instances: instances.len(),
            consumed: budget.consumed(),
            winner_mean,
            best_mean,
        });
    }

    let best = match elites.first() {
        Some(c) => c.clone(),
        // nothing could be evaluated: fall back to an unevaluated sample
        None => Candidate::new(settings.initial.first().cloned().unwrap_or_else(|| sample_pfsm(rng))),
    };
    Ok(RaceOutcome {
        best_mean: best.mean(),
        best: best.config,
        consumed: budget.consumed(),
        history,
    })
}
