//! Archive-based single-individual search over `[0, 1]`, the comparison
//! algorithms built on it, and evolution of test functions on which one
//! algorithm beats another.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::engine::{steady_state, EngineConfig, RunResult};
use crate::error::{Error, Result};
use crate::mep::{best_gene, decode_expression, evaluate_all, expression_ids, Chromosome, CompiledExpr, FitnessCases, MepOps};
use crate::primitives::{real, PrimitiveSet};
use crate::rng::{seeded, SimRng};

pub const DEFAULT_MAX_STEPS: usize = 100;
pub const DEFAULT_MAX_MUTATIONS: usize = 20;

/// A point of `[0, 1]` in 32-bit fixed point: `k / (2^32 - 1)`.
pub type Point = u32;

pub fn to_real(k: Point) -> f64 {
    f64::from(k) / f64::from(u32::MAX)
}

pub fn from_real(x: f64) -> Point {
    (x.clamp(0.0, 1.0) * f64::from(u32::MAX)).round() as Point
}

/// Neighborhood move of an algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NflMutation {
    /// Gaussian step on the real value, clamped to `[0, 1]`.
    Gaussian { sigma: f64 },
    /// Independent flip of each of the 32 bits.
    BitFlip { p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub name: String,
    pub mutation: NflMutation,
}

impl AlgorithmSpec {
    pub fn new(name: impl Into<String>, mutation: NflMutation) -> Result<Self> {
        let ok = match mutation {
            NflMutation::Gaussian { sigma } => sigma > 0.0 && sigma.is_finite(),
            NflMutation::BitFlip { p } => p > 0.0 && p < 1.0,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!("invalid mutation parameter {mutation:?}")));
        }
        Ok(Self {
            name: name.into(),
            mutation,
        })
    }

    /// Real encoding, Gaussian sigma 0.001.
    pub fn a1() -> Self {
        Self::new("A1", NflMutation::Gaussian { sigma: 0.001 }).expect("valid")
    }

    /// Real encoding, Gaussian sigma 0.01.
    pub fn a2() -> Self {
        Self::new("A2", NflMutation::Gaussian { sigma: 0.01 }).expect("valid")
    }

    /// Binary encoding, bit-flip probability 0.3.
    pub fn a3() -> Self {
        Self::new("A3", NflMutation::BitFlip { p: 0.3 }).expect("valid")
    }

    /// Binary encoding, bit-flip probability 0.1.
    pub fn a4() -> Self {
        Self::new("A4", NflMutation::BitFlip { p: 0.1 }).expect("valid")
    }

    /// `A1` .. `A4` by name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_uppercase().as_str() {
            "A1" => Ok(Self::a1()),
            "A2" => Ok(Self::a2()),
            "A3" => Ok(Self::a3()),
            "A4" => Ok(Self::a4()),
            _ => Err(Error::InvalidParameter(format!("unknown algorithm {name:?}"))),
        }
    }

    fn mutate<R: Rng + ?Sized>(&self, k: Point, rng: &mut R) -> Point {
        match self.mutation {
            NflMutation::Gaussian { sigma } => {
                let normal = Normal::new(0.0, sigma).expect("sigma validated on construction");
                from_real(to_real(k) + normal.sample(rng))
            }
            NflMutation::BitFlip { p } => {
                let mut mask = 0u32;
                for bit in 0..32 {
                    if rng.random_bool(p) {
                        mask |= 1 << bit;
                    }
                }
                k ^ mask
            }
        }
    }
}

/// Search budget of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NflBudget {
    /// Distinct points visited per run.
    pub max_steps: usize,
    /// Mutation attempts before jumping to a random point.
    pub max_mutations: usize,
}

impl Default for NflBudget {
    fn default() -> Self {
        Self {
            max_steps: DEFAULT_MAX_STEPS,
            max_mutations: DEFAULT_MAX_MUTATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NflTrace {
    /// Lowest objective value among visited points.
    pub best: f64,
    /// Best value after each visited point.
    pub best_so_far: Vec<f64>,
    pub archive_size: usize,
    pub reinitializations: usize,
}

const MAX_REINIT_DRAWS: usize = 1 << 20;

/// One run of the archive search minimising `f` over `[0, 1]`.
///
/// Each step mutates the current point until a mutant outside the archive
/// is accepted (no worse than the current point) or the mutation budget is
/// spent; in the latter case a uniformly drawn point outside the archive is
/// taken. The chosen point joins the archive and becomes current.
pub fn nfl_run<R: Rng + ?Sized>(
    spec: &AlgorithmSpec,
    f: &mut dyn FnMut(f64) -> f64,
    budget: NflBudget,
    rng: &mut R,
) -> NflTrace {
    assert!(budget.max_steps >= 1, "at least one step");
    let mut eval = |k: Point| {
        let v = f(to_real(k));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut archive: HashSet<Point> = HashSet::with_capacity(budget.max_steps);
    let mut cur: Point = rng.random();
    let mut cur_value = eval(cur);
    archive.insert(cur);
    let mut best = cur_value;
    let mut best_so_far = Vec::with_capacity(budget.max_steps);
    best_so_far.push(best);
    let mut reinitializations = 0;
    while archive.len() < budget.max_steps {
        let mut next = None;
        for _ in 0..budget.max_mutations {
            let m = spec.mutate(cur, rng);
            if archive.contains(&m) {
                continue;
            }
            let v = eval(m);
            if v <= cur_value {
                next = Some((m, v));
                break;
            }
        }
        let (k, v) = next.unwrap_or_else(|| {
            reinitializations += 1;
            let k = (0..MAX_REINIT_DRAWS)
                .map(|_| rng.random::<Point>())
                .find(|k| !archive.contains(k))
                .expect("the search space exceeds the archive");
            (k, eval(k))
        });
        archive.insert(k);
        cur = k;
        cur_value = v;
        best = best.min(v);
        best_so_far.push(best);
    }
    NflTrace {
        best,
        best_so_far,
        archive_size: archive.len(),
        reinitializations,
    }
}

/// Paired comparison of two algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Mean of `best_A - best_B`; negative means `A` is better.
    pub mean: f64,
    pub std_error: f64,
    pub runs: usize,
}

/// Runs both algorithms `runs` times on `f` and returns the mean paired
/// difference of their best values.
pub fn compare<R: Rng + ?Sized>(
    a: &AlgorithmSpec,
    b: &AlgorithmSpec,
    f: &mut dyn FnMut(f64) -> f64,
    runs: usize,
    budget: NflBudget,
    rng: &mut R,
) -> Comparison {
    assert!(runs >= 1, "at least one run");
    let diffs: Vec<f64> = (0..runs)
        .map(|_| nfl_run(a, f, budget, rng).best - nfl_run(b, f, budget, rng).best)
        .collect();
    let n = runs as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = if runs > 1 {
        diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Comparison {
        mean,
        std_error: (var / n).sqrt(),
        runs,
    }
}

/// Settings of the test-function evolver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NflEvolverConfig {
    pub length: usize,
    pub functions: Vec<String>,
    /// Runs per algorithm when scoring one expression.
    pub runs: usize,
    pub budget: NflBudget,
    /// Sample points used to repair expressions that raise on `[0, 1]`.
    pub repair_samples: usize,
}

impl Default for NflEvolverConfig {
    fn default() -> Self {
        Self {
            length: 63,
            functions: ["+", "-", "*", "sin", "exp"].map(String::from).to_vec(),
            runs: 500,
            budget: NflBudget::default(),
            repair_samples: 101,
        }
    }
}

/// Result of evolving a test function for an algorithm pair.
#[derive(Debug, Clone)]
pub struct MatchedFunction {
    pub expression: String,
    pub score: f64,
    pub gene: usize,
    pub result: RunResult<Chromosome>,
}

/// Primitive set over the single variable `x`.
pub fn nfl_primitives(functions: &[String]) -> Result<PrimitiveSet<f64>> {
    let functions = functions.iter().map(|f| real::by_name(f)).collect::<Result<Vec<_>>>()?;
    PrimitiveSet::new(vec!["x".into()], functions)
}

/// Per-gene comparison scores. Every gene is scored with the same random
/// stream, so differences between genes are not sampling noise.
fn gene_scores(
    chromosome: &mut Chromosome,
    set: &PrimitiveSet<f64>,
    grid: &FitnessCases<f64>,
    a: &AlgorithmSpec,
    b: &AlgorithmSpec,
    config: &NflEvolverConfig,
    rng: &mut SimRng,
) -> Vec<f64> {
    evaluate_all(chromosome, set, grid, rng);
    let stream: u64 = rng.random();
    let ids = expression_ids(chromosome);
    let mut known = std::collections::HashMap::new();
    (0..chromosome.len())
        .map(|i| {
            *known.entry(ids[i]).or_insert_with(|| {
                let expr = CompiledExpr::new(chromosome, i);
                let mut scratch = Vec::with_capacity(expr.size());
                let mut f = |x: f64| expr.eval(set, &[x], &mut scratch).unwrap_or(f64::INFINITY);
                compare(a, b, &mut f, config.runs, config.budget, &mut seeded(stream)).mean
            })
        })
        .collect()
}

/// Evolves an expression over `[0, 1]` minimising `compare(a, b, f)`.
pub fn evolve_matched_function(
    a: &AlgorithmSpec,
    b: &AlgorithmSpec,
    config: &NflEvolverConfig,
    engine: &EngineConfig,
    rng: &mut SimRng,
) -> Result<MatchedFunction> {
    engine.validate()?;
    if config.runs == 0 || config.budget.max_steps == 0 || config.repair_samples < 2 {
        return Err(Error::InvalidParameter("runs, max_steps and repair samples must be positive".into()));
    }
    let set = nfl_primitives(&config.functions)?;
    let m = config.repair_samples;
    let grid = FitnessCases::from_columns(vec![(0..m).map(|i| i as f64 / (m - 1) as f64).collect()]);
    let ops = MepOps::new(set.signature().clone(), config.length, engine.crossover, engine.mutation);
    let result = steady_state(
        &ops,
        engine,
        |c, rng| best_gene(gene_scores(c, &set, &grid, a, b, config, rng)).0,
        rng,
    );
    let mut best = result.best.clone();
    let (score, gene) = best_gene(gene_scores(&mut best, &set, &grid, a, b, config, &mut seeded(0)));
    Ok(MatchedFunction {
        expression: decode_expression(&best, &set, gene),
        score,
        gene,
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_round_trip() {
        assert_eq!(to_real(0), 0.0);
        assert_eq!(to_real(u32::MAX), 1.0);
        assert_eq!(from_real(2.0), u32::MAX);
        assert_eq!(from_real(-1.0), 0);
        for k in [1u32, 12345, u32::MAX / 3] {
            assert_eq!(from_real(to_real(k)), k);
        }
    }

    #[test]
    fn archive_size_is_exact() {
        let mut rng = seeded(1);
        for spec in [AlgorithmSpec::a1(), AlgorithmSpec::a2(), AlgorithmSpec::a3(), AlgorithmSpec::a4()] {
            for steps in [1, 7, 100] {
                let budget = NflBudget {
                    max_steps: steps,
                    max_mutations: 20,
                };
                let t = nfl_run(&spec, &mut |x| x, budget, &mut rng);
                assert_eq!(t.archive_size, steps);
                assert_eq!(t.best_so_far.len(), steps);
                assert!(t.best_so_far.windows(2).all(|w| w[1] <= w[0]));
            }
        }
    }

    #[test]
    fn constant_objective() {
        let t = nfl_run(&AlgorithmSpec::a3(), &mut |_| 0.0, NflBudget::default(), &mut seeded(2));
        assert_eq!(t.best, 0.0);
        let c = compare(&AlgorithmSpec::a1(), &AlgorithmSpec::a2(), &mut |_| 0.0, 50, NflBudget::default(), &mut seeded(3));
        assert_eq!(c.mean, 0.0);
        assert_eq!(c.std_error, 0.0);
    }

    #[test]
    fn tight_budget_forces_reinitialisation() {
        let budget = NflBudget {
            max_steps: 50,
            max_mutations: 1,
        };
        // An increasing objective rejects most upward moves.
        let t = nfl_run(&AlgorithmSpec::a2(), &mut |x| -x, budget, &mut seeded(4));
        assert!(t.reinitializations > 0);
        assert_eq!(t.archive_size, 50);
    }

    #[test]
    fn algorithms_by_name() {
        assert_eq!(AlgorithmSpec::by_name("a4").unwrap(), AlgorithmSpec::a4());
        assert!(AlgorithmSpec::by_name("A5").is_err());
        assert!(AlgorithmSpec::new("bad", NflMutation::BitFlip { p: 1.0 }).is_err());
    }

    #[test]
    fn identity_only_evolves_x() {
        let config = NflEvolverConfig {
            length: 5,
            functions: vec![],
            runs: 5,
            budget: NflBudget {
                max_steps: 10,
                max_mutations: 5,
            },
            repair_samples: 11,
        };
        let engine = EngineConfig {
            population_size: 4,
            generations: 2,
            crossover: crate::mep::CrossoverKind::TwoPoint,
            crossover_probability: 0.9,
            mutation: crate::mep::MutationSpec::Symbols(1),
            tournament_size: 2,
            elitism: 0,
            success_threshold: None,
            stop_on_success: false,
            seed: 0,
        };
        let m = evolve_matched_function(&AlgorithmSpec::a2(), &AlgorithmSpec::a1(), &config, &engine, &mut seeded(5)).unwrap();
        assert_eq!(m.expression, "x");
    }
}
