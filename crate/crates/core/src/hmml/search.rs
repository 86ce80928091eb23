use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::score::{SubsetScore, SubsetScorer};
use crate::error::{Error, Result};

pub const MAX_EXHAUSTIVE_VARIABLES: usize = 15;

/// Minimizes the codelength over all `2^m` subsets.
pub fn search_exhaustive(scorer: &SubsetScorer<'_>) -> Result<SubsetScore> {
    let m = scorer.m();
    if m > MAX_EXHAUSTIVE_VARIABLES {
        return Err(Error::TooManyVariables {
            m,
            max: MAX_EXHAUSTIVE_VARIABLES,
        });
    }
    let scored: Vec<(u64, f64)> = (0..1u64 << m)
        .into_par_iter()
        .map(|mask| (mask, scorer.codelength_or_inf(mask)))
        .collect();
    let best = scored
        .into_iter()
        .reduce(|a, b| if scorer.better(b, a) { b } else { a })
        .expect("at least the empty subset");
    scorer.score(best.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneticConfig {
    pub population: usize,
    pub generations: usize,
    /// Per-bit flip probability; `None` uses `1/m`.
    pub mutation_rate: Option<f64>,
    pub tournament: usize,
    /// Probability that a bit is set in the initial population.
    pub initial_density: f64,
    pub seed: u64,
}

impl Default for GeneticConfig {
    fn default() -> Self {
        Self {
            population: 64,
            generations: 100,
            mutation_rate: None,
            tournament: 3,
            initial_density: 0.5,
            seed: 0,
        }
    }
}

/// Bitmask genetic search with tournament selection, single-point crossover
/// and per-bit mutation. Returns the best subset ever evaluated.
pub fn search_genetic(scorer: &SubsetScorer<'_>, config: &GeneticConfig) -> Result<SubsetScore> {
    let m = scorer.m();
    if m == 0 {
        return scorer.score(0);
    }
    if config.population == 0 || config.tournament == 0 {
        return Err(Error::InvalidConfig("population and tournament size must be positive".into()));
    }
    let mutation = config.mutation_rate.unwrap_or(1.0 / m as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cache: HashMap<u64, f64> = HashMap::new();

    let mut population: Vec<u64> = (0..config.population)
        .map(|_| {
            (0..m).fold(0u64, |acc, j| {
                if rng.random::<f64>() < config.initial_density {
                    acc | 1 << j
                } else {
                    acc
                }
            })
        })
        .collect();
    let mut fitness = evaluate(scorer, &population, &mut cache);
    let mut best = best_of(scorer, &population, &fitness);

    for _ in 0..config.generations {
        let mut next = Vec::with_capacity(config.population);
        while next.len() < config.population {
            let a = population[tournament(&mut rng, &fitness, config.tournament)];
            let b = population[tournament(&mut rng, &fitness, config.tournament)];
            let (mut c1, mut c2) = if m > 1 {
                let cut = rng.random_range(1..m);
                let low = (1u64 << cut) - 1;
                ((a & low) | (b & !low), (b & low) | (a & !low))
            } else {
                (a, b)
            };
            for child in [&mut c1, &mut c2] {
                for j in 0..m {
                    if rng.random::<f64>() < mutation {
                        *child ^= 1 << j;
                    }
                }
            }
            next.push(c1);
            if next.len() < config.population {
                next.push(c2);
            }
        }
        population = next;
        fitness = evaluate(scorer, &population, &mut cache);
        let gen_best = best_of(scorer, &population, &fitness);
        if scorer.better(gen_best, best) {
            best = gen_best;
        }
    }
    scorer.score(best.0)
}

fn evaluate(scorer: &SubsetScorer<'_>, population: &[u64], cache: &mut HashMap<u64, f64>) -> Vec<f64> {
    let mut fresh: Vec<u64> = population.iter().copied().filter(|m| !cache.contains_key(m)).collect();
    fresh.sort_unstable();
    fresh.dedup();
    let scored: Vec<(u64, f64)> = fresh
        .par_iter()
        .map(|&mask| (mask, scorer.codelength_or_inf(mask)))
        .collect();
    cache.extend(scored);
    population.iter().map(|m| cache[m]).collect()
}

fn best_of(scorer: &SubsetScorer<'_>, population: &[u64], fitness: &[f64]) -> (u64, f64) {
    population
        .iter()
        .zip(fitness)
        .map(|(&m, &f)| (m, f))
        .reduce(|a, b| if scorer.better(b, a) { b } else { a })
        .expect("non-empty population")
}

fn tournament(rng: &mut ChaCha8Rng, fitness: &[f64], size: usize) -> usize {
    let mut winner = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let cand = rng.random_range(0..fitness.len());
        if fitness[cand] < fitness[winner] {
            winner = cand;
        }
    }
    winner
}
