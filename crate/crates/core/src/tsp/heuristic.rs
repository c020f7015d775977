//! MEP evolution of node-scoring heuristics for the greedy tour builder.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::features::{build_tour_best_start, Features, ProductMode, TourBuilder, FEATURE_NAMES};
use super::TiGraph;
use crate::engine::{steady_state_observed, EngineConfig, RunResult};
use crate::error::{Error, Result};
use crate::mep::{decode_expression, expression_ids, handle_exception, Chromosome, CompiledExpr, ExprFault, Gene, MepOps};
use crate::primitives::{real, PrimitiveSet};
use crate::rng::{seeded, SimRng};

/// Shape of an evolved heuristic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspHeuristicConfig {
    pub length: usize,
    pub functions: Vec<String>,
    #[serde(default)]
    pub product_mode: ProductMode,
}

impl Default for TspHeuristicConfig {
    fn default() -> Self {
        Self {
            length: 40,
            functions: ["+", "-", "/", "*", "cos", "sin", "min", "max"].map(String::from).to_vec(),
            product_mode: ProductMode::default(),
        }
    }
}

/// Primitive set over the path features.
pub fn heuristic_primitives(functions: &[String]) -> Result<PrimitiveSet<f64>> {
    let functions = functions.iter().map(|f| real::by_name(f)).collect::<Result<Vec<_>>>()?;
    PrimitiveSet::new(FEATURE_NAMES.map(String::from).to_vec(), functions)
}

fn score_with<'s>(
    set: &'s PrimitiveSet<f64>,
    expr: &'s CompiledExpr,
    scratch: &'s mut Vec<f64>,
) -> impl FnMut(&Features) -> std::result::Result<f64, ExprFault> + 's {
    move |f| expr.eval(set, &f.values, scratch)
}

/// A frozen training set scored by summed closed tour length.
pub struct HeuristicProblem<'g> {
    set: PrimitiveSet<f64>,
    builders: Vec<TourBuilder<'g>>,
    mode: ProductMode,
}

impl<'g> HeuristicProblem<'g> {
    pub fn new(training: &'g [TiGraph], config: &TspHeuristicConfig) -> Result<Self> {
        if training.is_empty() {
            return Err(Error::InvalidParameter("the training set is empty".into()));
        }
        Ok(Self {
            set: heuristic_primitives(&config.functions)?,
            builders: training.iter().map(TourBuilder::new).collect(),
            mode: config.product_mode,
        })
    }

    pub fn primitive_set(&self) -> &PrimitiveSet<f64> {
        &self.set
    }

    /// Summed tour length of the expression at `gene`, or the first fault.
    pub fn expression_fitness(&self, chromosome: &Chromosome, gene: usize) -> std::result::Result<f64, ExprFault> {
        let expr = CompiledExpr::new(chromosome, gene);
        let mut scratch = Vec::with_capacity(expr.size());
        let mut total = 0.0;
        for b in &self.builders {
            total += b.tour_from(0, self.mode, score_with(&self.set, &expr, &mut scratch))?.1;
        }
        Ok(total)
    }

    /// Summed tour length of every gene's expression.
    ///
    /// A gene that raises while some expression is being scored is replaced
    /// by a random terminal, and every expression containing it is scored
    /// again.
    pub fn gene_fitness(&self, chromosome: &mut Chromosome, rng: &mut SimRng) -> Vec<f64> {
        let n = chromosome.len();
        let mut results: Vec<Option<f64>> = vec![None; n];
        loop {
            let ids = expression_ids(chromosome);
            let mut known: HashMap<usize, f64> =
                ids.iter().zip(&results).filter_map(|(&id, r)| r.map(|v| (id, v))).collect();
            let mut fault = None;
            for i in 0..n {
                if results[i].is_some() {
                    continue;
                }
                if let Some(&v) = known.get(&ids[i]) {
                    results[i] = Some(v);
                    continue;
                }
                match self.expression_fitness(chromosome, i) {
                    Ok(v) => {
                        results[i] = Some(v);
                        known.insert(ids[i], v);
                    }
                    Err(f) => {
                        fault = Some(f.gene);
                        break;
                    }
                }
            }
            let Some(g) = fault else { break };
            chromosome.genes[g] = handle_exception(&chromosome.genes[g], self.set.signature(), rng);
            let mut dirty = vec![false; n];
            dirty[g] = true;
            for k in g..n {
                if let Gene::Function { args, .. } = chromosome.genes[k] {
                    dirty[k] = args.iter().any(|a| dirty[a]);
                }
                if dirty[k] {
                    results[k] = None;
                }
            }
        }
        results.into_iter().map(|r| r.expect("every gene scored")).collect()
    }

    /// Lowest per-gene fitness and the gene attaining it.
    pub fn fitness(&self, chromosome: &mut Chromosome, rng: &mut SimRng) -> (f64, usize) {
        crate::mep::best_gene(self.gene_fitness(chromosome, rng))
    }
}

/// One expression of an evolved chromosome used as a scoring function.
#[derive(Debug, Clone)]
pub struct EvolvedHeuristic {
    pub chromosome: Chromosome,
    pub gene: usize,
    pub set: PrimitiveSet<f64>,
    pub product_mode: ProductMode,
}

impl EvolvedHeuristic {
    pub fn new(chromosome: Chromosome, gene: usize, config: &TspHeuristicConfig) -> Result<Self> {
        Ok(Self {
            chromosome,
            gene,
            set: heuristic_primitives(&config.functions)?,
            product_mode: config.product_mode,
        })
    }

    pub fn expression(&self) -> String {
        decode_expression(&self.chromosome, &self.set, self.gene)
    }

    /// Tour from node 0. A candidate whose score raises is ranked last.
    pub fn tour(&self, graph: &TiGraph) -> (Vec<usize>, f64) {
        self.tour_with(graph, false)
    }

    /// Tour from node 0, or the best over all start nodes.
    pub fn tour_with(&self, graph: &TiGraph, every_start: bool) -> (Vec<usize>, f64) {
        let expr = CompiledExpr::new(&self.chromosome, self.gene);
        let mut scratch = Vec::with_capacity(expr.size());
        let score = |f: &Features| -> std::result::Result<f64, std::convert::Infallible> {
            Ok(expr.eval(&self.set, &f.values, &mut scratch).unwrap_or(f64::INFINITY))
        };
        let built = if every_start {
            build_tour_best_start(graph, self.product_mode, score)
        } else {
            TourBuilder::new(graph).tour_from(0, self.product_mode, score)
        };
        match built {
            Ok(t) => t,
            Err(never) => match never {},
        }
    }

    /// Summed tour length over `graphs`.
    pub fn total_length(&self, graphs: &[TiGraph]) -> f64 {
        graphs.iter().map(|g| self.tour(g).1).sum()
    }
}

/// Best heuristic seen on the validation set.
#[derive(Debug, Clone)]
pub struct ValidationRecord {
    pub generation: usize,
    pub length: f64,
    pub heuristic: EvolvedHeuristic,
}

#[derive(Debug, Clone)]
pub struct HeuristicRun {
    pub result: RunResult<Chromosome>,
    /// Gene of the final best chromosome with the lowest training fitness.
    pub best_gene: usize,
    pub validation: Option<ValidationRecord>,
}

impl HeuristicRun {
    /// The validation-selected heuristic if a validation set was used, the
    /// training-best otherwise.
    pub fn heuristic(&self, config: &TspHeuristicConfig) -> Result<EvolvedHeuristic> {
        match &self.validation {
            Some(v) => Ok(v.heuristic.clone()),
            None => EvolvedHeuristic::new(self.result.best.clone(), self.best_gene, config),
        }
    }
}

/// Evolves a heuristic on `training`. When `validation` is nonempty the
/// population best is scored on it after every generation and the best
/// scorer is kept.
pub fn run_tsp_heuristic(
    training: &[TiGraph],
    validation: &[TiGraph],
    heuristic: &TspHeuristicConfig,
    config: &EngineConfig,
    rng: &mut SimRng,
) -> Result<HeuristicRun> {
    config.validate()?;
    let problem = HeuristicProblem::new(training, heuristic)?;
    let ops = MepOps::new(problem.primitive_set().signature().clone(), heuristic.length, config.crossover, config.mutation);
    let mut record: Option<ValidationRecord> = None;
    let mut last_checked: Option<Chromosome> = None;
    let mut local = seeded(0);
    let result = steady_state_observed(
        &ops,
        config,
        |c, rng| problem.fitness(c, rng).0,
        rng,
        |generation| {
            if validation.is_empty() {
                return;
            }
            let best = &generation.genomes[generation.best_index()];
            if last_checked.as_ref() == Some(best) {
                return;
            }
            last_checked = Some(best.clone());
            let mut c = best.clone();
            let (_, gene) = problem.fitness(&mut c, &mut local);
            let candidate = EvolvedHeuristic {
                chromosome: c,
                gene,
                set: problem.primitive_set().clone(),
                product_mode: heuristic.product_mode,
            };
            let length = candidate.total_length(validation);
            if record.as_ref().is_none_or(|r| length < r.length) {
                record = Some(ValidationRecord {
                    generation: generation.index,
                    length,
                    heuristic: candidate,
                });
            }
        },
    );
    let mut best = result.best.clone();
    let (_, best_gene) = problem.fitness(&mut best, &mut local);
    Ok(HeuristicRun {
        result,
        best_gene,
        validation: record,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mep::{CrossoverKind, MutationSpec};
    use crate::tsp::features::{D_Y1_Y2, MAX_G_Y1, SUM_G_Y2};
    use crate::tsp::{is_permutation, nn_tour, random_graph_set, tour_length};

    fn graphs(seed: u64) -> Vec<TiGraph> {
        random_graph_set(6, 3, 15, &mut seeded(seed))
    }

    #[test]
    fn distance_gene_scores_nearest_neighbor_total() {
        let g = graphs(1);
        let problem = HeuristicProblem::new(&g, &TspHeuristicConfig::default()).unwrap();
        let c = Chromosome::new(vec![Gene::Terminal(D_Y1_Y2)]);
        let nn: f64 = g.iter().map(|g| tour_length(g, &nn_tour(g, 0))).sum();
        assert!((problem.expression_fitness(&c, 0).unwrap() - nn).abs() < 1e-9);
    }

    #[test]
    fn fitness_is_additive() {
        let g = graphs(2);
        let cfg = TspHeuristicConfig::default();
        let c = Chromosome::new(vec![Gene::Terminal(SUM_G_Y2)]);
        let whole = HeuristicProblem::new(&g, &cfg).unwrap().expression_fitness(&c, 0).unwrap();
        let parts: f64 = g
            .chunks(1)
            .map(|one| HeuristicProblem::new(one, &cfg).unwrap().expression_fitness(&c, 0).unwrap())
            .sum();
        assert!((whole - parts).abs() < 1e-9);
    }

    #[test]
    fn raising_gene_is_repaired() {
        let g = graphs(3);
        let problem = HeuristicProblem::new(&g, &TspHeuristicConfig::default()).unwrap();
        let div = problem.primitive_set().function_index("/").unwrap();
        let plus = problem.primitive_set().function_index("+").unwrap();
        let minus = problem.primitive_set().function_index("-").unwrap();
        let mut c = Chromosome::new(vec![
            Gene::Terminal(D_Y1_Y2),
            Gene::function(div, &[0, 0]),
            Gene::Terminal(MAX_G_Y1),
            Gene::function(minus, &[0, 0]),
            Gene::function(div, &[2, 3]),
            Gene::function(plus, &[4, 0]),
        ]);
        let per_gene = problem.gene_fitness(&mut c, &mut seeded(4));
        assert!(c.genes[4].is_terminal());
        assert!(per_gene.iter().all(|v| v.is_finite()));
        for (i, &v) in per_gene.iter().enumerate() {
            assert_eq!(problem.expression_fitness(&c, i), Ok(v));
        }
    }

    #[test]
    fn published_heuristic_completes() {
        // sum_g(y2) * (d - max(d, max_g(y1)) + d)
        let cfg = TspHeuristicConfig::default();
        let set = heuristic_primitives(&cfg.functions).unwrap();
        let op = |name: &str| set.function_index(name).unwrap();
        let c = Chromosome::new(vec![
            Gene::Terminal(SUM_G_Y2),
            Gene::Terminal(D_Y1_Y2),
            Gene::Terminal(MAX_G_Y1),
            Gene::function(op("max"), &[1, 2]),
            Gene::function(op("-"), &[1, 3]),
            Gene::function(op("+"), &[4, 1]),
            Gene::function(op("*"), &[0, 5]),
        ]);
        let h = EvolvedHeuristic::new(c, 6, &cfg).unwrap();
        assert_eq!(h.expression(), "(sum_g_y2*((d_y1_y2-max(d_y1_y2,max_g_y1))+d_y1_y2))");
        for g in random_graph_set(5, 10, 60, &mut seeded(9)) {
            let (t, len) = h.tour(&g);
            assert!(is_permutation(&t, g.len()));
            assert!((len - tour_length(&g, &t)).abs() < 1e-9);
        }
    }

    #[test]
    fn small_run_is_deterministic_and_improves_on_validation() {
        let train = graphs(5);
        let valid = graphs(6);
        let cfg = TspHeuristicConfig {
            length: 10,
            ..TspHeuristicConfig::default()
        };
        let engine = EngineConfig {
            population_size: 10,
            generations: 3,
            crossover: CrossoverKind::OnePoint,
            crossover_probability: 0.9,
            mutation: MutationSpec::PerGene(0.1),
            tournament_size: 2,
            elitism: 1,
            success_threshold: None,
            stop_on_success: false,
            seed: 0,
        };
        let a = run_tsp_heuristic(&train, &valid, &cfg, &engine, &mut seeded(7)).unwrap();
        let b = run_tsp_heuristic(&train, &valid, &cfg, &engine, &mut seeded(7)).unwrap();
        assert_eq!(a.result.best, b.result.best);
        assert_eq!(a.result.best_per_generation.len(), 4);
        let v = a.validation.expect("validation record");
        assert!((v.heuristic.total_length(&valid) - v.length).abs() < 1e-9);
        let sig = heuristic_primitives(&cfg.functions).unwrap().signature().clone();
        assert!(a.result.best.is_valid(&sig));
    }
}
