//! Steady-state evolutionary loop shared by all representations.
//!
//! Each generation performs `|P|/2` iterations. An iteration selects two
//! parents by tournament, recombines them with the configured probability,
//! mutates both offspring and lets the better offspring replace the worst
//! individual of the population if it is strictly better. Fitness is
//! minimised.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mep::{CrossoverKind, MutationSpec};
use crate::rng::SimRng;

/// Representation-specific genetic operators.
pub trait Variation {
    type Genome: Clone + Send;

    fn random(&self, rng: &mut SimRng) -> Self::Genome;

    fn crossover(
        &self,
        a: &Self::Genome,
        b: &Self::Genome,
        rng: &mut SimRng,
    ) -> (Self::Genome, Self::Genome);

    fn mutate(&self, genome: &mut Self::Genome, rng: &mut SimRng);
}

fn default_elitism() -> usize {
    0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover: CrossoverKind,
    pub crossover_probability: f64,
    pub mutation: MutationSpec,
    pub tournament_size: usize,
    #[serde(default = "default_elitism")]
    pub elitism: usize,
    /// A run is successful once its best fitness drops below this value.
    #[serde(default)]
    pub success_threshold: Option<f64>,
    /// Stop a run at its first success; the trajectory is padded with the
    /// final best value.
    #[serde(default)]
    pub stop_on_success: bool,
    #[serde(default)]
    pub seed: u64,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if self.tournament_size < 1 {
            return bad("tournament_size must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.crossover_probability) {
            return bad("crossover_probability must lie in [0, 1]");
        }
        if let MutationSpec::PerGene(p) = self.mutation {
            if !(0.0..=1.0).contains(&p) {
                return bad("mutation probability must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult<G> {
    /// Best fitness of the initial population followed by the best fitness
    /// after each generation.
    pub best_per_generation: Vec<f64>,
    pub best: G,
    pub best_fitness: f64,
    /// First generation (0 is the initial population) whose best fitness
    /// met the success threshold.
    pub success_generation: Option<usize>,
    pub evaluations: usize,
}

impl<G> RunResult<G> {
    pub fn success(&self) -> bool {
        self.success_generation.is_some()
    }
}

/// A population snapshot handed to observers after each generation.
pub struct Generation<'a, G> {
    pub index: usize,
    pub genomes: &'a [G],
    pub fitness: &'a [f64],
}

impl<G> Generation<'_, G> {
    pub fn best_index(&self) -> usize {
        best_index(self.fitness)
    }
}

fn best_index(fitness: &[f64]) -> usize {
    let mut best = 0;
    for (i, &f) in fitness.iter().enumerate() {
        if f < fitness[best] {
            best = i;
        }
    }
    best
}

fn tournament(fitness: &[f64], q: usize, rng: &mut SimRng) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    for _ in 1..q {
        let c = rng.random_range(0..fitness.len());
        if fitness[c] < fitness[best] {
            best = c;
        }
    }
    best
}

fn worst_index(fitness: &[f64], elitism: usize) -> Option<usize> {
    let mut protected = vec![false; fitness.len()];
    if elitism > 0 {
        let mut order: Vec<usize> = (0..fitness.len()).collect();
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)));
        for &i in order.iter().take(elitism) {
            protected[i] = true;
        }
    }
    let mut worst: Option<usize> = None;
    for (i, &f) in fitness.iter().enumerate() {
        if protected[i] {
            continue;
        }
        if worst.is_none_or(|w| f > fitness[w]) {
            worst = Some(i);
        }
    }
    worst
}

fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

/// Runs the steady-state algorithm.
pub fn steady_state<V, F>(
    ops: &V,
    config: &EngineConfig,
    fitness: F,
    rng: &mut SimRng,
) -> RunResult<V::Genome>
where
    V: Variation,
    F: FnMut(&mut V::Genome, &mut SimRng) -> f64,
{
    steady_state_observed(ops, config, fitness, rng, |_| {})
}

/// Runs the steady-state algorithm, calling `observer` with the initial
/// population and after every generation.
pub fn steady_state_observed<V, F, O>(
    ops: &V,
    config: &EngineConfig,
    mut fitness: F,
    rng: &mut SimRng,
    mut observer: O,
) -> RunResult<V::Genome>
where
    V: Variation,
    F: FnMut(&mut V::Genome, &mut SimRng) -> f64,
    O: FnMut(&Generation<'_, V::Genome>),
{
    let size = config.population_size;
    let mut evaluations = 0;
    let mut evaluate = |g: &mut V::Genome, rng: &mut SimRng| {
        evaluations += 1;
        sanitize(fitness(g, rng))
    };

    let mut genomes: Vec<V::Genome> = Vec::with_capacity(size);
    let mut scores: Vec<f64> = Vec::with_capacity(size);
    for _ in 0..size {
        let mut g = ops.random(rng);
        let f = evaluate(&mut g, rng);
        genomes.push(g);
        scores.push(f);
    }

    let succeeded = |f: f64| config.success_threshold.is_some_and(|t| f < t);
    let mut trajectory = Vec::with_capacity(config.generations + 1);
    let best0 = scores[best_index(&scores)];
    trajectory.push(best0);
    let mut success_generation = succeeded(best0).then_some(0);
    observer(&Generation {
        index: 0,
        genomes: &genomes,
        fitness: &scores,
    });

    let iterations = (size / 2).max(1);
    for generation in 1..=config.generations {
        if config.stop_on_success && success_generation.is_some() {
            break;
        }
        for _ in 0..iterations {
            let p1 = tournament(&scores, config.tournament_size, rng);
            let p2 = tournament(&scores, config.tournament_size, rng);
            let (mut o1, mut o2) = if rng.random_bool(config.crossover_probability) {
                ops.crossover(&genomes[p1], &genomes[p2], rng)
            } else {
                (genomes[p1].clone(), genomes[p2].clone())
            };
            ops.mutate(&mut o1, rng);
            ops.mutate(&mut o2, rng);
            let f1 = evaluate(&mut o1, rng);
            let f2 = evaluate(&mut o2, rng);
            let (child, f) = if f1 < f2 { (o1, f1) } else { (o2, f2) };
            if let Some(w) = worst_index(&scores, config.elitism) {
                if f < scores[w] {
                    genomes[w] = child;
                    scores[w] = f;
                }
            }
        }
        let best = scores[best_index(&scores)];
        trajectory.push(best);
        if success_generation.is_none() && succeeded(best) {
            success_generation = Some(generation);
        }
        observer(&Generation {
            index: generation,
            genomes: &genomes,
            fitness: &scores,
        });
    }
    let last = *trajectory.last().expect("trajectory is never empty");
    trajectory.resize(config.generations + 1, last);

    let b = best_index(&scores);
    RunResult {
        best_per_generation: trajectory,
        best: genomes.swap_remove(b),
        best_fitness: scores[b],
        success_generation,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    /// Bit strings minimising the number of ones.
    struct Bits(usize);

    impl Variation for Bits {
        type Genome = Vec<bool>;

        fn random(&self, rng: &mut SimRng) -> Vec<bool> {
            (0..self.0).map(|_| rng.random_bool(0.5)).collect()
        }

        fn crossover(&self, a: &Vec<bool>, b: &Vec<bool>, rng: &mut SimRng) -> (Vec<bool>, Vec<bool>) {
            crate::mep::crossover(a, b, CrossoverKind::OnePoint, rng)
        }

        fn mutate(&self, g: &mut Vec<bool>, rng: &mut SimRng) {
            let i = rng.random_range(0..g.len());
            g[i] = !g[i];
        }
    }

    fn config() -> EngineConfig {
        EngineConfig {
            population_size: 20,
            generations: 30,
            crossover: CrossoverKind::OnePoint,
            crossover_probability: 0.9,
            mutation: MutationSpec::Symbols(1),
            tournament_size: 2,
            elitism: 0,
            success_threshold: Some(0.5),
            stop_on_success: false,
            seed: 0,
        }
    }

    fn ones(g: &mut [bool], _: &mut SimRng) -> f64 {
        g.iter().filter(|&&b| b).count() as f64
    }

    #[test]
    fn trajectory_is_non_increasing_and_deterministic() {
        let a = steady_state(&Bits(30), &config(), |g, r| ones(g, r), &mut seeded(1));
        let b = steady_state(&Bits(30), &config(), |g, r| ones(g, r), &mut seeded(1));
        assert_eq!(a, b);
        assert_eq!(a.best_per_generation.len(), 31);
        assert!(a.best_per_generation.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(a.evaluations, 20 + 30 * 20);
    }

    #[test]
    fn stop_on_success_pads_trajectory() {
        let cfg = EngineConfig {
            generations: 500,
            stop_on_success: true,
            ..config()
        };
        let r = steady_state(&Bits(8), &cfg, |g, r| ones(g, r), &mut seeded(2));
        assert!(r.success());
        assert_eq!(r.best_per_generation.len(), 501);
        assert_eq!(*r.best_per_generation.last().unwrap(), 0.0);
        assert!(r.evaluations < 20 + 500 * 20);
    }

    #[test]
    fn worst_skips_elite() {
        assert_eq!(worst_index(&[3.0, 1.0, 2.0], 0), Some(0));
        assert_eq!(worst_index(&[1.0, 1.0], 1), Some(1));
        assert_eq!(worst_index(&[5.0], 1), None);
    }

    #[test]
    fn validation() {
        assert!(config().validate().is_ok());
        let bad = EngineConfig {
            population_size: 1,
            ..config()
        };
        assert!(bad.validate().is_err());
        let bad = EngineConfig {
            crossover_probability: 1.5,
            ..config()
        };
        assert!(bad.validate().is_err());
    }
}
