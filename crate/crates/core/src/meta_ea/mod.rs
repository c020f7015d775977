//! Evolution of evolutionary algorithms. A macro-level steady-state search
//! evolves operator programs; each program is scored by running the
//! micro-level algorithm it encodes on a real-valued or TSP problem.

pub mod functions;
pub mod lgp;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::engine::{steady_state, EngineConfig, RunResult};
use crate::error::{Error, Result};
use crate::mep::{active_genes, best_gene, Chromosome, Gene, MepOps};
use crate::primitives::Signature;
use crate::rng::SimRng;
use crate::tsp::{dpx_crossover, nn_init, tour_length, two_exchange, TiGraph};

pub use functions::{griewangk, test_function, test_functions, TestFunction};
pub use lgp::{run_meta_lgp, LgpEaInstruction, LgpEaOps, LgpEaProgram};

/// Problem-specific operators used by micro-level algorithms.
pub trait MicroProblem: Sync {
    type Solution: Clone + Send;

    fn initialize(&self, rng: &mut SimRng) -> Self::Solution;
    fn crossover(&self, a: &Self::Solution, b: &Self::Solution, rng: &mut SimRng) -> Self::Solution;
    fn mutate(&self, a: &Self::Solution, rng: &mut SimRng) -> Self::Solution;
    /// Objective value; lower is better.
    fn evaluate(&self, s: &Self::Solution) -> f64;
}

/// Real-vector optimisation: uniform initialisation, convex crossover with
/// `alpha = 1/2` and Gaussian mutation clamped to the domain.
#[derive(Debug, Clone)]
pub struct RealProblem {
    pub function: TestFunction,
    pub dimension: usize,
    pub sigma: f64,
}

impl RealProblem {
    pub fn new(function: TestFunction, dimension: usize, sigma: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("mutation sigma {sigma} must be positive")));
        }
        Ok(Self {
            function,
            dimension,
            sigma,
        })
    }

    /// Griewangk in 5 dimensions with `sigma = 0.5`.
    pub fn griewangk5() -> Self {
        Self::new(test_function("f4").expect("f4 is registered"), 5, 0.5).expect("valid parameters")
    }
}

impl MicroProblem for RealProblem {
    type Solution = Vec<f64>;

    fn initialize(&self, rng: &mut SimRng) -> Vec<f64> {
        let (lo, hi) = self.function.domain;
        (0..self.dimension).map(|_| rng.random_range(lo..=hi)).collect()
    }

    fn crossover(&self, a: &Vec<f64>, b: &Vec<f64>, _: &mut SimRng) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| 0.5 * x + 0.5 * y).collect()
    }

    fn mutate(&self, a: &Vec<f64>, rng: &mut SimRng) -> Vec<f64> {
        let (lo, hi) = self.function.domain;
        let normal = Normal::new(0.0, self.sigma).expect("sigma validated on construction");
        a.iter().map(|x| (x + normal.sample(rng)).clamp(lo, hi)).collect()
    }

    fn evaluate(&self, s: &Vec<f64>) -> f64 {
        self.function.eval(s)
    }
}

/// Tours on one TSP instance: nearest-neighbor initialisation from a random
/// city, DPX crossover and 2-exchange mutation.
#[derive(Debug, Clone)]
pub struct TspMicro {
    pub graph: TiGraph,
}

impl MicroProblem for TspMicro {
    type Solution = Vec<usize>;

    fn initialize(&self, rng: &mut SimRng) -> Vec<usize> {
        nn_init(&self.graph, rng)
    }

    fn crossover(&self, a: &Vec<usize>, b: &Vec<usize>, _: &mut SimRng) -> Vec<usize> {
        dpx_crossover(&self.graph, a, b)
    }

    fn mutate(&self, a: &Vec<usize>, rng: &mut SimRng) -> Vec<usize> {
        let mut t = a.clone();
        two_exchange(&mut t, rng);
        t
    }

    fn evaluate(&self, s: &Vec<usize>) -> f64 {
        tour_length(&self.graph, s)
    }
}

/// Function symbols of MEP-encoded algorithms, in signature order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetaOp {
    Select,
    Crossover,
    Mutate,
}

impl MetaOp {
    pub const ALL: [MetaOp; 3] = [MetaOp::Select, MetaOp::Crossover, MetaOp::Mutate];

    pub fn from_index(op: usize) -> Self {
        Self::ALL[op]
    }

    pub fn arity(self) -> usize {
        match self {
            MetaOp::Mutate => 1,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MetaOp::Select => "Select",
            MetaOp::Crossover => "Crossover",
            MetaOp::Mutate => "Mutate",
        }
    }
}

/// One terminal (`Initialize`) and the functions `Select`, `Crossover`,
/// `Mutate`.
pub fn meta_signature() -> Signature {
    Signature::new(1, MetaOp::ALL.iter().map(|o| o.arity()).collect())
}

/// One instruction of a decoded micro-algorithm. `args` index earlier
/// instructions of the same listing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetaInstruction {
    Initialize,
    Apply { op: MetaOp, args: Vec<usize> },
}

/// The straight-line algorithm ending at `gene`, in execution order.
pub fn decode_meta(chromosome: &Chromosome, gene: usize) -> Vec<MetaInstruction> {
    let positions = active_genes(chromosome, gene);
    let mut slot = vec![usize::MAX; gene + 1];
    for (s, &p) in positions.iter().enumerate() {
        slot[p] = s;
    }
    positions
        .iter()
        .map(|&p| match chromosome.genes[p] {
            Gene::Terminal(_) => MetaInstruction::Initialize,
            Gene::Function { op, args } => MetaInstruction::Apply {
                op: MetaOp::from_index(op),
                args: args.iter().map(|a| slot[a]).collect(),
            },
        })
        .collect()
}

/// Listing in the form `i1=Initialize`, `i2=Mutate(i1)`, one per line.
pub fn render_meta(listing: &[MetaInstruction]) -> String {
    listing
        .iter()
        .enumerate()
        .map(|(k, ins)| match ins {
            MetaInstruction::Initialize => format!("i{}=Initialize", k + 1),
            MetaInstruction::Apply { op, args } => {
                let a: Vec<String> = args.iter().map(|a| format!("i{}", a + 1)).collect();
                format!("i{}={}({})", k + 1, op.name(), a.join(", "))
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// One micro-run of every algorithm encoded in the chromosome. Entry `i` is
/// the best objective value produced by the algorithm ending at gene `i`.
pub fn run_meta_once<P: MicroProblem>(chromosome: &Chromosome, problem: &P, rng: &mut SimRng) -> Vec<f64> {
    let n = chromosome.len();
    let mut solutions: Vec<P::Solution> = Vec::with_capacity(n);
    let mut values: Vec<f64> = Vec::with_capacity(n);
    let mut best: Vec<f64> = Vec::with_capacity(n);
    for gene in &chromosome.genes {
        let (s, v, b) = match *gene {
            Gene::Terminal(_) => {
                let s = problem.initialize(rng);
                let v = problem.evaluate(&s);
                (s, v, v)
            }
            Gene::Function { op, args } => match MetaOp::from_index(op) {
                MetaOp::Select => {
                    let (a, b) = (args.get(0), args.get(1));
                    let pick = if values[b] < values[a] { b } else { a };
                    (solutions[pick].clone(), values[pick], best[a].min(best[b]))
                }
                MetaOp::Crossover => {
                    let (a, b) = (args.get(0), args.get(1));
                    let s = problem.crossover(&solutions[a], &solutions[b], rng);
                    let v = problem.evaluate(&s);
                    (s, v, v.min(best[a]).min(best[b]))
                }
                MetaOp::Mutate => {
                    let a = args.get(0);
                    let s = problem.mutate(&solutions[a], rng);
                    let v = problem.evaluate(&s);
                    (s, v, v.min(best[a]))
                }
            },
        };
        solutions.push(s);
        values.push(v);
        best.push(b);
    }
    best
}

/// How per-run results of the encoded algorithms become a fitness.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaAggregation {
    /// Average over runs of the best encoded algorithm's result in that run.
    #[default]
    BestPerRun,
    /// Average each encoded algorithm over the runs and keep the best
    /// average.
    BestOnAverage,
}

/// Fitness of an MEP-encoded chromosome over `runs` micro-runs, with the
/// gene whose algorithm attains the best average.
pub fn meta_fitness<P: MicroProblem>(
    chromosome: &Chromosome,
    problem: &P,
    runs: usize,
    aggregation: MetaAggregation,
    rng: &mut SimRng,
) -> (f64, usize) {
    assert!(runs >= 1, "at least one micro-run");
    let mut totals = vec![0.0; chromosome.len()];
    let mut best_per_run = 0.0;
    for _ in 0..runs {
        let per_gene = run_meta_once(chromosome, problem, rng);
        best_per_run += best_gene(per_gene.iter().copied()).0;
        for (t, v) in totals.iter_mut().zip(&per_gene) {
            *t += v;
        }
    }
    let (best_avg, gene) = best_gene(totals.iter().map(|t| t / runs as f64));
    match aggregation {
        MetaAggregation::BestPerRun => (best_per_run / runs as f64, gene),
        MetaAggregation::BestOnAverage => (best_avg, gene),
    }
}

/// Evolves MEP-encoded algorithms for `problem`.
pub fn run_meta_mep<P: MicroProblem>(
    problem: &P,
    length: usize,
    runs: usize,
    aggregation: MetaAggregation,
    config: &EngineConfig,
    rng: &mut SimRng,
) -> Result<RunResult<Chromosome>> {
    config.validate()?;
    if runs == 0 {
        return Err(Error::InvalidParameter("micro runs must be at least 1".into()));
    }
    let ops = MepOps::new(meta_signature(), length, config.crossover, config.mutation);
    Ok(steady_state(&ops, config, |c, rng| meta_fitness(c, problem, runs, aggregation, rng).0, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::tsp::{is_permutation, random_ti_graph};

    const SELECT: usize = 0;
    const CROSSOVER: usize = 1;
    const MUTATE: usize = 2;

    /// The eight-gene worked chromosome, with 1-based pointers converted.
    fn worked() -> Chromosome {
        Chromosome::new(vec![
            Gene::Terminal(0),
            Gene::Terminal(0),
            Gene::function(MUTATE, &[0]),
            Gene::function(SELECT, &[0, 2]),
            Gene::function(CROSSOVER, &[1, 3]),
            Gene::function(MUTATE, &[3]),
            Gene::function(MUTATE, &[4]),
            Gene::function(CROSSOVER, &[1, 5]),
        ])
    }

    #[test]
    fn decodes_worked_listings() {
        let c = worked();
        assert!(c.is_valid(&meta_signature()));
        let expected = [
            "i1=Initialize",
            "i1=Initialize",
            "i1=Initialize\ni2=Mutate(i1)",
            "i1=Initialize\ni2=Mutate(i1)\ni3=Select(i1, i2)",
            "i1=Initialize\ni2=Initialize\ni3=Mutate(i1)\ni4=Select(i1, i3)\ni5=Crossover(i2, i4)",
            "i1=Initialize\ni2=Mutate(i1)\ni3=Select(i1, i2)\ni4=Mutate(i3)",
            "i1=Initialize\ni2=Initialize\ni3=Mutate(i1)\ni4=Select(i1, i3)\ni5=Crossover(i2, i4)\ni6=Mutate(i5)",
            "i1=Initialize\ni2=Initialize\ni3=Mutate(i1)\ni4=Select(i1, i3)\ni5=Mutate(i4)\ni6=Crossover(i2, i5)",
        ];
        for (g, text) in expected.iter().enumerate() {
            assert_eq!(render_meta(&decode_meta(&c, g)), *text, "gene {g}");
        }
    }

    #[test]
    fn select_keeps_the_better() {
        let p = RealProblem::new(test_function("f6").unwrap(), 3, 0.5).unwrap();
        let c = Chromosome::new(vec![Gene::Terminal(0), Gene::Terminal(0), Gene::function(SELECT, &[0, 1])]);
        let mut rng = seeded(3);
        let mut replay = seeded(3);
        let a = p.evaluate(&p.initialize(&mut replay));
        let b = p.evaluate(&p.initialize(&mut replay));
        let best = run_meta_once(&c, &p, &mut rng);
        assert_eq!(best, vec![a, b, a.min(b)]);
    }

    #[test]
    fn single_initialize_on_sphere_is_positive() {
        let p = RealProblem::new(test_function("f6").unwrap(), 5, 0.5).unwrap();
        let c = Chromosome::new(vec![Gene::Terminal(0)]);
        let (f, gene) = meta_fitness(&c, &p, 20, MetaAggregation::BestPerRun, &mut seeded(1));
        assert!(f > 0.0);
        assert_eq!(gene, 0);
    }

    #[test]
    fn convex_crossover_stays_in_box_and_mutation_is_clamped() {
        let p = RealProblem::new(test_function("f1").unwrap(), 4, 50.0).unwrap();
        let mut rng = seeded(2);
        for _ in 0..100 {
            let a = p.initialize(&mut rng);
            let b = p.initialize(&mut rng);
            let c = p.crossover(&a, &b, &mut rng);
            let m = p.mutate(&c, &mut rng);
            assert!(c.iter().chain(&m).all(|v| (-5.0..=5.0).contains(v)));
        }
    }

    #[test]
    fn fitness_is_deterministic_and_aggregations_are_ordered() {
        let p = RealProblem::griewangk5();
        let ops = MepOps::new(meta_signature(), 30, crate::mep::CrossoverKind::Uniform, crate::mep::MutationSpec::Symbols(5));
        let mut rng = seeded(4);
        let c = crate::engine::Variation::random(&ops, &mut rng);
        let a = meta_fitness(&c, &p, 10, MetaAggregation::BestPerRun, &mut seeded(9));
        let b = meta_fitness(&c, &p, 10, MetaAggregation::BestPerRun, &mut seeded(9));
        assert_eq!(a, b);
        let avg = meta_fitness(&c, &p, 10, MetaAggregation::BestOnAverage, &mut seeded(9));
        assert!(a.0 <= avg.0);
        assert_eq!(a.1, avg.1);
    }

    #[test]
    fn tsp_micro_operators_produce_tours() {
        let p = TspMicro {
            graph: random_ti_graph(15, &mut seeded(5)),
        };
        let c = worked();
        let mut rng = seeded(6);
        let best = run_meta_once(&c, &p, &mut rng);
        assert!(best.iter().all(|v| v.is_finite() && *v > 0.0));
        let t = p.mutate(&p.crossover(&p.initialize(&mut rng), &p.initialize(&mut rng), &mut rng), &mut rng);
        assert!(is_permutation(&t, 15));
    }
}
