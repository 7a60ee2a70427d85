//! Speciation, stagnation, reproduction and the generational loop.

use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rayon::prelude::*;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::genome::{compatibility_distance, initial_genome, Genome, InnovationRegistry};
use crate::network::{fitness, CompiledNetwork};
use crate::plant::Dataset;
use crate::random::{seeded, RunRng};
use crate::variation::{crossover, mutate};

/// Environment variable capping evaluation threads (0 or unset = rayon default).
pub const THREADS_ENV: &str = "TDNEAT_THREADS";

/// Fitness assigned to genomes whose free-run response diverges.
pub const FITNESS_FLOOR: f64 = -1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    pub id: usize,
    pub representative: Genome,
    /// Indices into the current population.
    pub members: Vec<usize>,
    pub best_fitness_ever: f64,
    pub last_improved: usize,
}

/// Fitness of one genome on a dataset, clamped to [`FITNESS_FLOOR`].
pub fn evaluate_genome(genome: &Genome, dataset: &Dataset) -> f64 {
    let Ok(net) = CompiledNetwork::compile(genome) else {
        return FITNESS_FLOOR;
    };
    let y = net.simulate_free_run(&dataset.u);
    match fitness(&y, &dataset.t) {
        Ok(f) if f.is_finite() => f.max(FITNESS_FLOOR),
        _ => FITNESS_FLOOR,
    }
}

/// Parallel fitness evaluation. Results do not depend on the thread count.
pub struct Evaluator {
    pool: Option<rayon::ThreadPool>,
}

impl Evaluator {
    /// `threads == 0` uses rayon's global pool.
    pub fn new(threads: usize) -> Evaluator {
        let pool = (threads > 0).then(|| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("failed to build evaluation thread pool")
        });
        Evaluator { pool }
    }

    pub fn from_env() -> Evaluator {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(0);
        Evaluator::new(threads)
    }

    /// Fills in every missing fitness.
    pub fn evaluate(&self, genomes: &mut [Genome], dataset: &Dataset) {
        let run = |genomes: &mut [Genome]| {
            genomes
                .par_iter_mut()
                .filter(|g| g.fitness.is_none())
                .for_each(|g| g.fitness = Some(evaluate_genome(g, dataset)));
        };
        match &self.pool {
            Some(pool) => pool.install(|| run(genomes)),
            None => run(genomes),
        }
    }
}

fn fitness_of(g: &Genome) -> f64 {
    g.fitness.unwrap_or(f64::NEG_INFINITY)
}

/// Member indices sorted best first; ties keep population order.
fn ranked(members: &[usize], genomes: &[Genome]) -> Vec<usize> {
    let mut out = members.to_vec();
    out.sort_by(|&a, &b| fitness_of(&genomes[b]).total_cmp(&fitness_of(&genomes[a])));
    out
}

/// Assigns each genome to the first species whose representative lies closer
/// than the compatibility threshold, founding new species as needed. Surviving
/// species then take the member closest to their old representative as the
/// new one; empty species are dropped.
pub fn speciate(
    genomes: &[Genome],
    previous: Vec<Species>,
    config: &Config,
    generation: usize,
    next_id: &mut usize,
) -> Vec<Species> {
    let mut species: Vec<Species> = previous
        .into_iter()
        .map(|mut s| {
            s.members.clear();
            s
        })
        .collect();
    for (i, g) in genomes.iter().enumerate() {
        let home = species
            .iter_mut()
            .find(|s| compatibility_distance(&s.representative, g, config) < config.compatibility_threshold);
        match home {
            Some(s) => s.members.push(i),
            None => {
                species.push(Species {
                    id: *next_id,
                    representative: g.clone(),
                    members: vec![i],
                    best_fitness_ever: f64::NEG_INFINITY,
                    last_improved: generation,
                });
                *next_id += 1;
            }
        }
    }
    species.retain(|s| !s.members.is_empty());
    for s in &mut species {
        let closest = s
            .members
            .iter()
            .copied()
            .min_by(|&a, &b| {
                compatibility_distance(&s.representative, &genomes[a], config)
                    .total_cmp(&compatibility_distance(&s.representative, &genomes[b], config))
            })
            .expect("nonempty species");
        s.representative = genomes[closest].clone();
    }
    species
}

/// Updates improvement records and drops species stagnant for more than
/// `max_stagnation` generations, sparing the `species_elitism` best.
pub fn update_stagnation(
    mut species: Vec<Species>,
    genomes: &[Genome],
    config: &Config,
    generation: usize,
) -> Vec<Species> {
    let mut current = Vec::with_capacity(species.len());
    for s in &mut species {
        let best = s
            .members
            .iter()
            .map(|&i| fitness_of(&genomes[i]))
            .fold(f64::NEG_INFINITY, f64::max);
        if best > s.best_fitness_ever {
            s.best_fitness_ever = best;
            s.last_improved = generation;
        }
        current.push(best);
    }
    let mut by_rank: Vec<usize> = (0..species.len()).collect();
    by_rank.sort_by(|&a, &b| current[b].total_cmp(&current[a]));
    let mut protected = vec![false; species.len()];
    for &i in by_rank.iter().take(config.species_elitism) {
        protected[i] = true;
    }
    species
        .into_iter()
        .enumerate()
        .filter(|(i, s)| protected[*i] || generation.saturating_sub(s.last_improved) <= config.max_stagnation)
        .map(|(_, s)| s)
        .collect()
}

/// Splits `total` offspring among species in proportion to `masses`.
///
/// Every species gets one slot first (while slots last, best mass first); the
/// rest is shared by largest remainder, ties going to the earlier species.
pub fn allocate_offspring(masses: &[f64], total: usize) -> Vec<usize> {
    let n = masses.len();
    let mut quotas = vec![0usize; n];
    if n == 0 {
        return quotas;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| masses[b].total_cmp(&masses[a]));
    for &i in order.iter().take(total) {
        quotas[i] = 1;
    }
    let remaining = total.saturating_sub(n);
    if remaining == 0 {
        return quotas;
    }
    let sum: f64 = masses.iter().sum();
    let shares: Vec<f64> = if sum > 0.0 && sum.is_finite() {
        masses.iter().map(|m| m / sum * remaining as f64).collect()
    } else {
        vec![remaining as f64 / n as f64; n]
    };
    let mut assigned = 0;
    for (q, s) in quotas.iter_mut().zip(&shares) {
        let whole = s.floor() as usize;
        *q += whole;
        assigned += whole;
    }
    let mut by_remainder: Vec<usize> = (0..n).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = shares[a] - shares[a].floor();
        let rb = shares[b] - shares[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in by_remainder.iter().cycle().take(remaining.saturating_sub(assigned)) {
        quotas[i] += 1;
    }
    // Floating-point shares can overshoot by one whole slot.
    for &i in by_remainder.iter().rev() {
        if quotas.iter().sum::<usize>() <= total {
            break;
        }
        if quotas[i] > 1 {
            quotas[i] -= 1;
        }
    }
    quotas
}

/// The next generation, plus which old genomes were carried over verbatim.
#[derive(Debug, Clone)]
pub struct Offspring {
    pub genomes: Vec<Genome>,
    /// `(new index, old index)` for every elite copy.
    pub elites: Vec<(usize, usize)>,
    /// Offspring quota per species, in species order.
    pub quotas: Vec<usize>,
}

/// Builds exactly `pop_size` genomes from the surviving species.
pub fn reproduce(
    species: &[Species],
    genomes: &[Genome],
    config: &Config,
    rng: &mut RunRng,
    registry: &mut InnovationRegistry,
) -> Result<Offspring> {
    if species.is_empty() {
        return Err(Error::Extinction);
    }
    let min_fitness = species
        .iter()
        .flat_map(|s| s.members.iter().map(|&i| fitness_of(&genomes[i])))
        .fold(f64::INFINITY, f64::min);
    let masses: Vec<f64> = species
        .iter()
        .map(|s| {
            let size = s.members.len() as f64;
            s.members
                .iter()
                .map(|&i| (fitness_of(&genomes[i]) - min_fitness) / size)
                .sum()
        })
        .collect();
    let quotas = allocate_offspring(&masses, config.pop_size);

    let mut next = Vec::with_capacity(config.pop_size);
    let mut elites = Vec::new();
    for (s, &quota) in species.iter().zip(&quotas) {
        if quota == 0 {
            continue;
        }
        let ranked = ranked(&s.members, genomes);
        let elite_count = config.elitism.min(ranked.len()).min(quota);
        for &old in &ranked[..elite_count] {
            elites.push((next.len(), old));
            next.push(genomes[old].clone());
        }
        let survivors = ((ranked.len() as f64 * config.survival_threshold).ceil() as usize)
            .max(ranked.len().min(2));
        let pool = &ranked[..survivors];
        for _ in elite_count..quota {
            let &a = pool.choose(rng).expect("nonempty parent pool");
            let &b = pool.choose(rng).expect("nonempty parent pool");
            let mut child = crossover(&genomes[a], &genomes[b], config, rng);
            mutate(&mut child, config, rng, registry);
            next.push(child);
        }
    }
    debug_assert_eq!(next.len(), config.pop_size);
    Ok(Offspring {
        genomes: next,
        elites,
        quotas,
    })
}

/// What happened during one call to [`Population::advance`].
#[derive(Debug, Clone)]
pub enum Advance {
    Reproduced(Offspring),
    Reinitialized,
}

/// A population in the middle of a run.
pub struct Population {
    pub config: Config,
    pub genomes: Vec<Genome>,
    pub species: Vec<Species>,
    pub generation: usize,
    pub registry: InnovationRegistry,
    pub reinitializations: usize,
    rng: RunRng,
    next_species_id: usize,
}

impl Population {
    /// Fresh population seeded from `config.seed`.
    pub fn new(config: &Config) -> Population {
        let mut rng = seeded(config.seed);
        let mut registry = InnovationRegistry::new();
        let genomes = (0..config.pop_size)
            .map(|_| initial_genome(config, &mut rng, &mut registry))
            .collect();
        Population {
            config: config.clone(),
            genomes,
            species: Vec::new(),
            generation: 0,
            registry,
            reinitializations: 0,
            rng,
            next_species_id: 0,
        }
    }

    pub fn evaluate(&mut self, dataset: &Dataset, evaluator: &Evaluator) {
        evaluator.evaluate(&mut self.genomes, dataset);
    }

    pub fn speciate(&mut self) {
        let previous = std::mem::take(&mut self.species);
        self.species = speciate(
            &self.genomes,
            previous,
            &self.config,
            self.generation,
            &mut self.next_species_id,
        );
    }

    /// Stagnation culling and reproduction; total extinction restarts from
    /// fresh initial genomes while keeping the innovation registry.
    pub fn advance(&mut self) -> Result<Advance> {
        let species = std::mem::take(&mut self.species);
        let survivors = update_stagnation(species, &self.genomes, &self.config, self.generation);
        self.generation += 1;
        match reproduce(&survivors, &self.genomes, &self.config, &mut self.rng, &mut self.registry) {
            Ok(offspring) => {
                self.genomes = offspring.genomes.clone();
                self.species = survivors;
                Ok(Advance::Reproduced(offspring))
            }
            Err(Error::Extinction) => {
                self.genomes = (0..self.config.pop_size)
                    .map(|_| initial_genome(&self.config, &mut self.rng, &mut self.registry))
                    .collect();
                self.reinitializations += 1;
                Ok(Advance::Reinitialized)
            }
            Err(e) => Err(e),
        }
    }

    pub fn best(&self) -> Option<&Genome> {
        self.genomes
            .iter()
            .filter(|g| g.fitness.is_some())
            .reduce(|a, b| if fitness_of(b) > fitness_of(a) { b } else { a })
    }
}

/// One row of the per-generation statistics stream.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub mean_fitness: f64,
    /// Best fitness seen so far in the run.
    pub best_fitness: f64,
    pub species_count: usize,
    pub best_du: u32,
    pub best_dy: u32,
    pub best_node_count: usize,
    pub best_connection_count: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    /// Best genome seen over the whole run.
    pub winner: Genome,
    pub log: Vec<GenerationStats>,
    pub reinitializations: usize,
    pub wall_time: Duration,
}

/// Runs `config.generations` generations of evolution against `dataset`.
pub fn evolve(config: &Config, dataset: &Dataset, evaluator: &Evaluator) -> Result<RunResult> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidDataset("dataset has no samples".into()));
    }
    let start = Instant::now();
    let mut population = Population::new(config);
    let mut winner: Option<Genome> = None;
    let mut log = Vec::with_capacity(config.generations + 1);
    loop {
        population.evaluate(dataset, evaluator);
        population.speciate();

        let champion = population.best().expect("population is never empty");
        if winner.as_ref().is_none_or(|w| fitness_of(champion) > fitness_of(w)) {
            winner = Some(champion.clone());
        }
        let best = winner.as_ref().unwrap();
        let mean_fitness =
            population.genomes.iter().map(fitness_of).sum::<f64>() / population.genomes.len() as f64;
        log.push(GenerationStats {
            generation: population.generation,
            mean_fitness,
            best_fitness: fitness_of(best),
            species_count: population.species.len(),
            best_du: best.du,
            best_dy: best.dy,
            best_node_count: best.nodes.len(),
            best_connection_count: best.connections.len(),
        });

        if population.generation >= config.generations {
            break;
        }
        population.advance()?;
    }
    Ok(RunResult {
        winner: winner.expect("at least one generation evaluated"),
        log,
        reinitializations: population.reinitializations,
        wall_time: start.elapsed(),
    })
}
