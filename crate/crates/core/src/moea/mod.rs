//! Mutation-only NSGA-II over drive-strength chromosomes.
//!
//! The loop keeps a parent population `P` of size `N` and an offspring
//! population `Q` made by mutating every parent once. Each generation the
//! union `R = P ∪ Q` is evaluated, sorted into non-dominated fronts, and the
//! next `P` is filled front by front; the front that does not fit is
//! truncated by descending crowding distance. Randomness comes from one
//! counter-based stream per `(generation, parent index)`, and evaluation is
//! pure, so results do not depend on how many threads evaluate.

mod mutation;
mod sorting;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{Evaluate, ObjectiveVector};
use crate::explorer::hypervolume_dominating;
use crate::netlist::Chromosome;

pub use mutation::{mutate, stream_rng, GeneSpace};
pub use sorting::{crowding_distance, dominates, fast_non_dominated_sort, trade_off_index};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoeaConfig {
    /// `N`; at least 2 and even.
    pub population_size: usize,
    /// `M`; at least 1.
    pub generations: usize,
    /// Per-gene mutation probability in (0, 1].
    pub mutation_rate: f64,
    pub rng_seed: u64,
    /// Concurrent evaluations; `None` uses every core.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    /// Fixed hypervolume reference for the per-generation history. Defaults
    /// to 1.1 times the componentwise maximum of the initial population.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hv_reference: Option<ObjectiveVector>,
}

impl Default for MoeaConfig {
    fn default() -> Self {
        MoeaConfig {
            population_size: 200,
            generations: 200,
            mutation_rate: 0.01,
            rng_seed: 1,
            jobs: None,
            hv_reference: None,
        }
    }
}

impl MoeaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "population size must be even and at least 2, got {}",
                self.population_size
            )));
        }
        if self.generations < 1 {
            return Err(Error::InvalidConfig(
                "at least one generation is required".to_owned(),
            ));
        }
        if !(self.mutation_rate > 0.0 && self.mutation_rate <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "mutation rate must lie in (0, 1], got {}",
                self.mutation_rate
            )));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidConfig("jobs must be at least 1".to_owned()));
        }
        Ok(())
    }
}

/// Where an individual came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Provenance {
    /// A copy of seed `n`.
    Seed(usize),
    /// Mutated from `parent` while producing offspring in `generation`.
    Mutant { parent: u64, generation: usize },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Seed(s) => write!(f, "seed:{s}"),
            Provenance::Mutant { parent, generation } => write!(f, "mutant:{parent}@{generation}"),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("malformed provenance `{s}`");
        if let Some(seed) = s.strip_prefix("seed:") {
            return seed.parse().map(Provenance::Seed).map_err(|_| bad());
        }
        let rest = s.strip_prefix("mutant:").ok_or_else(bad)?;
        let (parent, generation) = rest.split_once('@').ok_or_else(bad)?;
        Ok(Provenance::Mutant {
            parent: parent.parse().map_err(|_| bad())?,
            generation: generation.parse().map_err(|_| bad())?,
        })
    }
}

impl TryFrom<String> for Provenance {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Provenance> for String {
    fn from(p: Provenance) -> String {
        p.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub id: u64,
    pub chromosome: Chromosome,
    pub objectives: Option<ObjectiveVector>,
    /// 1-based front index from the last selection.
    pub rank: Option<usize>,
    pub crowding: f64,
    pub provenance: Provenance,
}

impl Individual {
    fn new(id: u64, chromosome: Chromosome, provenance: Provenance) -> Self {
        Individual {
            id,
            chromosome,
            objectives: None,
            rank: None,
            crowding: 0.0,
            provenance,
        }
    }

    /// Objectives of an evaluated individual.
    pub fn objectives(&self) -> ObjectiveVector {
        self.objectives.expect("individual has been evaluated")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub min_d_wc: f64,
    pub min_p_total: f64,
    pub min_a_gate: f64,
    pub front_size: usize,
    pub hypervolume: f64,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    /// The final parent population.
    pub population: Vec<Individual>,
    /// Generation 0 is the seeded population.
    pub history: Vec<GenerationStats>,
    /// Distinct evaluations performed.
    pub evaluations: usize,
    pub hv_reference: ObjectiveVector,
}

impl Evolution {
    /// Rank-1 members of the final population.
    pub fn first_front(&self) -> Vec<&Individual> {
        self.population
            .iter()
            .filter(|i| i.rank == Some(1))
            .collect()
    }
}

/// `n` individuals made by cycling through `seeds` in order.
pub fn make_initial_population(
    seeds: &[Chromosome],
    n: usize,
    space: &GeneSpace,
) -> Result<Vec<Individual>> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one seed is required".to_owned(),
        ));
    }
    for s in seeds {
        space.check(s)?;
    }
    Ok((0..n)
        .map(|i| {
            let s = i % seeds.len();
            Individual::new(i as u64, seeds[s].clone(), Provenance::Seed(s))
        })
        .collect())
}

fn evaluate_missing<E: Evaluate>(
    population: &mut [Individual],
    evaluator: &E,
    generation: usize,
    pool: Option<&rayon::ThreadPool>,
) -> Result<usize> {
    let mut known: HashMap<&Chromosome, ObjectiveVector> = HashMap::new();
    for ind in population.iter() {
        if let Some(o) = ind.objectives {
            known.entry(&ind.chromosome).or_insert(o);
        }
    }
    let mut pending: Vec<(&Chromosome, u64)> = Vec::new();
    let mut queued: HashMap<&Chromosome, ()> = HashMap::new();
    for ind in population.iter() {
        if ind.objectives.is_none()
            && !known.contains_key(&ind.chromosome)
            && queued.insert(&ind.chromosome, ()).is_none()
        {
            pending.push((&ind.chromosome, ind.id));
        }
    }
    let work = || -> Vec<Result<ObjectiveVector>> {
        pending
            .par_iter()
            .map(|(c, _)| evaluator.evaluate(c))
            .collect()
    };
    let results = match pool {
        Some(pool) => pool.install(work),
        None => work(),
    };
    let count = pending.len();
    let mut fresh: HashMap<Chromosome, ObjectiveVector> = HashMap::with_capacity(count);
    for ((c, id), r) in pending.iter().zip(results) {
        let o = r.map_err(|e| Error::Evaluation {
            generation,
            individual: *id,
            source: Box::new(e),
        })?;
        fresh.insert((*c).clone(), o);
    }
    let known: HashMap<Chromosome, ObjectiveVector> =
        known.into_iter().map(|(c, o)| (c.clone(), o)).collect();
    for ind in population.iter_mut() {
        if ind.objectives.is_none() {
            ind.objectives = Some(
                fresh
                    .get(&ind.chromosome)
                    .or_else(|| known.get(&ind.chromosome))
                    .copied()
                    .expect("every chromosome was evaluated"),
            );
        }
    }
    Ok(count)
}

/// Elitist survivor selection: whole fronts while they fit, then the spilling
/// front by descending crowding distance (ties by position). Sets rank and
/// crowding on the survivors.
pub fn select_survivors(mut pool: Vec<Individual>, n: usize) -> Vec<Individual> {
    let objectives: Vec<ObjectiveVector> = pool.iter().map(Individual::objectives).collect();
    let fronts = fast_non_dominated_sort(&objectives);
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    for (r, front) in fronts.iter().enumerate() {
        let crowd = crowding_distance(&objectives, front);
        for (&i, &d) in front.iter().zip(&crowd) {
            pool[i].rank = Some(r + 1);
            pool[i].crowding = d;
        }
        if chosen.len() + front.len() <= n {
            chosen.extend_from_slice(front);
        } else {
            let mut order: Vec<usize> = (0..front.len()).collect();
            order.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]));
            let room = n - chosen.len();
            chosen.extend(order.into_iter().take(room).map(|k| front[k]));
        }
        if chosen.len() == n {
            break;
        }
    }
    let mut slots: Vec<Option<Individual>> = pool.into_iter().map(Some).collect();
    chosen
        .into_iter()
        .map(|i| slots[i].take().expect("each index chosen once"))
        .collect()
}

fn generation_stats(
    generation: usize,
    population: &[Individual],
    reference: &ObjectiveVector,
) -> GenerationStats {
    let points: Vec<ObjectiveVector> = population.iter().map(Individual::objectives).collect();
    let min = |k: usize| {
        points
            .iter()
            .map(|p| p.get(k))
            .fold(f64::INFINITY, f64::min)
    };
    let fronts = fast_non_dominated_sort(&points);
    let first: Vec<ObjectiveVector> = fronts
        .first()
        .map(|f| f.iter().map(|&i| points[i]).collect())
        .unwrap_or_default();
    GenerationStats {
        generation,
        min_d_wc: min(0),
        min_p_total: min(1),
        min_a_gate: min(2),
        front_size: first.len(),
        hypervolume: hypervolume_dominating(&first, reference),
    }
}

fn offspring(
    parents: &[Individual],
    space: &GeneSpace,
    config: &MoeaConfig,
    generation: usize,
    next_id: &mut u64,
) -> Vec<Individual> {
    parents
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = stream_rng(config.rng_seed, generation, i);
            let child = mutate(&p.chromosome, space, config.mutation_rate, &mut rng);
            let id = *next_id;
            *next_id += 1;
            Individual::new(
                id,
                child,
                Provenance::Mutant {
                    parent: p.id,
                    generation,
                },
            )
        })
        .collect()
}

/// Runs `config.generations` generations from `seeds`.
pub fn evolve<E: Evaluate>(
    space: &GeneSpace,
    evaluator: &E,
    config: &MoeaConfig,
    seeds: &[Chromosome],
) -> Result<Evolution> {
    evolve_with(space, evaluator, config, seeds, |_| {})
}

/// [`evolve`] with a callback after every generation (including the seeded one).
pub fn evolve_with<E: Evaluate>(
    space: &GeneSpace,
    evaluator: &E,
    config: &MoeaConfig,
    seeds: &[Chromosome],
    mut observe: impl FnMut(&GenerationStats),
) -> Result<Evolution> {
    config.validate()?;
    let pool = match config.jobs {
        Some(j) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| {
                    Error::InvalidConfig(format!("cannot start {j} worker threads: {e}"))
                })?,
        ),
        None => None,
    };
    let pool = pool.as_ref();
    let n = config.population_size;
    let mut parents = make_initial_population(seeds, n, space)?;
    let mut next_id = n as u64;
    let mut evaluations = evaluate_missing(&mut parents, evaluator, 0, pool)?;

    let reference = config.hv_reference.unwrap_or_else(|| {
        let mut worst = [f64::NEG_INFINITY; 3];
        for p in &parents {
            for (w, v) in worst.iter_mut().zip(p.objectives().as_array()) {
                *w = w.max(v);
            }
        }
        ObjectiveVector::from_array(worst.map(|w| 1.1 * w))
    });

    let mut history = Vec::with_capacity(config.generations + 1);
    let stats = generation_stats(0, &parents, &reference);
    observe(&stats);
    history.push(stats);

    let mut children = offspring(&parents, space, config, 0, &mut next_id);
    for t in 1..=config.generations {
        let mut union = parents;
        union.append(&mut children);
        evaluations += evaluate_missing(&mut union, evaluator, t, pool)?;
        parents = select_survivors(union, n);
        let stats = generation_stats(t, &parents, &reference);
        observe(&stats);
        history.push(stats);
        if t < config.generations {
            children = offspring(&parents, space, config, t, &mut next_id);
        }
    }
    Ok(Evolution {
        population: parents,
        history,
        evaluations,
        hv_reference: reference,
    })
}
