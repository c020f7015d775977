//! Seeded experiment batches, the results CSV and summary statistics.

use std::io::{BufRead, BufReader, Read, Write};
use std::time::{Duration, Instant};

use multiexpr::circuit::{adder_target, boolean_set, gate_set, multiplexer_target, multiplier_target, parity_target};
use multiexpr::circuit::{CircuitProblem, TruthTable};
use multiexpr::engine::{steady_state, EngineConfig, RunResult};
use multiexpr::ifgp::{load_csv, run_ifgp_classification, threshold_dataset, Dataset, IfgpMutation, IfgpOps, SymbolTable};
use multiexpr::lgp::RegisterInit;
use multiexpr::mep::{Layout, MepOps, MutationSpec};
use multiexpr::problems::{lookup, run_lgp_regression, run_mep_regression, LgpFitness, RegressionProblem};
use multiexpr::rng::{run_batch, run_seed, seeded, SimRng};
use multiexpr::stats::{koza_effort, mean_std, success_rate, Effort};
use serde::{Deserialize, Serialize};

use crate::config::{is_circuit, static_function, EngineKind, ExperimentConfig};
use crate::error::{BenchError, Result};

/// Outcome of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: usize,
    pub seed: u64,
    /// Best fitness of the initial population, then after each generation.
    pub best_per_generation: Vec<f64>,
    pub success_generation: Option<usize>,
    pub wall_time: Duration,
}

impl RunRecord {
    pub fn success(&self) -> bool {
        self.success_generation.is_some()
    }

    pub fn final_best(&self) -> f64 {
        self.best_per_generation.last().copied().unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    /// The resolved configuration the runs used.
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub population_size: usize,
    pub generations: usize,
    /// Mean and sample standard deviation of the final best fitness.
    pub mean_best: f64,
    pub std_best: f64,
    pub z: f64,
    /// `None` when no run succeeded.
    pub effort: Option<Effort>,
}

enum Task {
    Regression {
        problem: RegressionProblem,
        length: usize,
    },
    Lgp {
        problem: RegressionProblem,
        length: usize,
        mutations: usize,
        mode: LgpFitness,
        init: RegisterInit,
    },
    Circuit {
        problem: CircuitProblem,
        ops: MepOps,
    },
    Ifgp {
        ops: IfgpOps,
        data: Dataset,
    },
}

fn config_err(e: impl std::fmt::Display) -> BenchError {
    BenchError::Config(e.to_string())
}

fn circuit_table(name: &str, bits: usize) -> multiexpr::Result<TruthTable> {
    match name {
        "even_parity" => parity_target(bits),
        "multiplexer" => multiplexer_target(bits),
        "adder" => adder_target(bits, false),
        _ => multiplier_target(bits),
    }
}

fn trajectory<G>(r: RunResult<G>) -> (Vec<f64>, Option<usize>) {
    (r.best_per_generation, r.success_generation)
}

impl Task {
    /// Builds the problem from a resolved config; every failure here is a
    /// configuration error.
    fn prepare(cfg: &ExperimentConfig) -> Result<Self> {
        let p = &cfg.problem;
        let length = p.length.expect("resolved");
        match cfg.engine {
            EngineKind::Mep if is_circuit(&p.name) => {
                let table = circuit_table(&p.name, p.bits.expect("resolved")).map_err(config_err)?;
                let set = match &p.gates {
                    Some(g) => gate_set(&table, g),
                    None => {
                        let names: Vec<&str> = p.functions.iter().flatten().map(String::as_str).collect();
                        boolean_set(&table, &names)
                    }
                }
                .map_err(config_err)?;
                if length <= table.num_inputs() {
                    return Err(config_err(format!(
                        "length {length} leaves no function genes after {} inputs",
                        table.num_inputs()
                    )));
                }
                let ops = MepOps::new(set.signature().clone(), length, cfg.evolution.crossover, cfg.evolution.mutation)
                    .with_layout(Layout::TerminalsFirst);
                Ok(Task::Circuit {
                    problem: CircuitProblem::new(table, set),
                    ops,
                })
            }
            EngineKind::Mep | EngineKind::Mslgp | EngineKind::Sslgp => {
                let mut problem = lookup(&p.name).map_err(config_err)?;
                if let Some(n) = p.num_cases {
                    problem = problem.with_cases(n);
                }
                if let Some(fs) = &p.functions {
                    let fs = fs.iter().map(|f| static_function(f)).collect::<Result<Vec<_>>>()?;
                    problem = problem.with_functions(fs);
                }
                problem.primitive_set().map_err(config_err)?;
                if cfg.engine == EngineKind::Mep {
                    return Ok(Task::Regression { problem, length });
                }
                let mode = if cfg.engine == EngineKind::Mslgp {
                    LgpFitness::MultiSolution
                } else {
                    LgpFitness::SingleSolution
                };
                Ok(Task::Lgp {
                    problem,
                    length,
                    mutations: p.mutations.expect("resolved"),
                    mode,
                    init: p.register_init.expect("resolved"),
                })
            }
            EngineKind::Ifgp => {
                let data = match p.name.as_str() {
                    "threshold" => threshold_dataset(p.rows.expect("resolved"), &mut seeded(cfg.master_seed)),
                    _ => load_csv(p.data.as_ref().expect("validated"), true).map_err(config_err)?,
                };
                if length < 2 {
                    return Err(config_err("IFGP chromosomes need at least two genes"));
                }
                let mutation = match cfg.evolution.mutation {
                    MutationSpec::PerGene(q) => IfgpMutation::PerGene(q),
                    MutationSpec::Symbols(k) => IfgpMutation::Count(k),
                };
                let ops = IfgpOps {
                    table: SymbolTable::classification(data.num_inputs(), p.constant_range),
                    length,
                    mutation,
                };
                Ok(Task::Ifgp { ops, data })
            }
        }
    }

    fn run(&self, run_id: usize, seed: u64, evo: &EngineConfig, rng: &mut SimRng) -> Result<RunRecord> {
        let start = Instant::now();
        let (best, success) = match self {
            Task::Regression { problem, length } => trajectory(run_mep_regression(problem, *length, evo, rng)?),
            Task::Lgp {
                problem,
                length,
                mutations,
                mode,
                init,
            } => trajectory(run_lgp_regression(problem, *length, *mutations, *mode, *init, evo, rng)?),
            Task::Circuit { problem, ops } => trajectory(steady_state(ops, evo, |c, r| problem.fitness(c, r), rng)),
            Task::Ifgp { ops, data } => trajectory(run_ifgp_classification(ops, evo, data, None, rng)?.result),
        };
        Ok(RunRecord {
            run_id,
            seed,
            best_per_generation: best,
            success_generation: success,
            wall_time: start.elapsed(),
        })
    }
}

/// Validates the config, then performs its seeded runs on the worker pool.
/// Run `k` uses seed `master_seed ^ k`; records are ordered by run id.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResults> {
    config.validate()?;
    let config = config.resolved();
    let task = Task::prepare(&config)?;
    let evo = &config.evolution;
    let runs = run_batch(config.runs, config.master_seed, |k, rng| {
        task.run(k, run_seed(config.master_seed, k), evo, rng)
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResults { config, runs })
}

/// Runs the experiment once per sweep value.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<(usize, ExperimentResults)>> {
    config.validate()?;
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| config_err("the config has no sweep section"))?;
    sweep
        .values
        .iter()
        .map(|&v| Ok((v, run_experiment(&config.with_sweep_value(sweep.field, v))?)))
        .collect()
}

pub fn summarize(config: &ExperimentConfig, runs: &[RunRecord]) -> Summary {
    let finals: Vec<f64> = runs.iter().map(RunRecord::final_best).collect();
    let (mean_best, std_best) = mean_std(&finals);
    let first: Vec<Option<usize>> = runs.iter().map(|r| r.success_generation).collect();
    let population = config.evolution.population_size;
    let generations = config.evolution.generations;
    let z = config.z.unwrap_or(0.99);
    Summary {
        runs: runs.len(),
        successes: runs.iter().filter(|r| r.success()).count(),
        success_rate: success_rate(runs.iter().map(RunRecord::success)),
        population_size: population,
        generations,
        mean_best,
        std_best,
        z,
        effort: koza_effort(&first, population as u64, generations.max(1), z).ok(),
    }
}

impl ExperimentResults {
    pub fn summary(&self) -> Summary {
        summarize(&self.config, &self.runs)
    }

    pub fn successes(&self) -> Vec<bool> {
        self.runs.iter().map(RunRecord::success).collect()
    }
}

const CONFIG_PREFIX: &str = "# config ";

/// Writes `run_id,generation,best_fitness,success` rows after a comment
/// line echoing the resolved configuration.
pub fn write_results_csv<W: Write>(results: &ExperimentResults, mut out: W) -> Result<()> {
    writeln!(out, "{CONFIG_PREFIX}{}", results.config.to_json())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run_id", "generation", "best_fitness", "success"])?;
    for r in &results.runs {
        for (g, f) in r.best_per_generation.iter().enumerate() {
            let success = r.success_generation.is_some_and(|s| g >= s);
            w.write_record([r.run_id.to_string(), g.to_string(), f.to_string(), u8::from(success).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct Row {
    run_id: usize,
    generation: usize,
    best_fitness: f64,
    success: u8,
}

/// Reads a results CSV back. The echoed configuration is returned when the
/// file carries one; seeds are reconstructed from it and wall times are
/// zero.
pub fn read_results_csv<R: Read>(input: R) -> Result<(Option<ExperimentConfig>, Vec<RunRecord>)> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let (config, header_line) = match first.strip_prefix(CONFIG_PREFIX) {
        Some(json) => (Some(ExperimentConfig::from_json(json.trim_end())?), None),
        None => (None, Some(first)),
    };
    let offset = usize::from(config.is_some());
    let body: Box<dyn Read> = match header_line {
        Some(h) => Box::new(std::io::Cursor::new(h.into_bytes()).chain(reader)),
        None => Box::new(reader),
    };
    let mut runs: Vec<RunRecord> = Vec::new();
    for (i, row) in csv::Reader::from_reader(body).deserialize::<Row>().enumerate() {
        let line = i + 2 + offset;
        let row = row.map_err(|e| BenchError::Results {
            line,
            message: e.to_string(),
        })?;
        if runs.last().is_none_or(|r| r.run_id != row.run_id) {
            if runs.iter().any(|r| r.run_id == row.run_id) {
                return Err(BenchError::Results {
                    line,
                    message: format!("rows of run {} are not contiguous", row.run_id),
                });
            }
            let seed = config.as_ref().map_or(0, |c| run_seed(c.master_seed, row.run_id));
            runs.push(RunRecord {
                run_id: row.run_id,
                seed,
                best_per_generation: Vec::new(),
                success_generation: None,
                wall_time: Duration::ZERO,
            });
        }
        let run = runs.last_mut().expect("pushed above");
        if row.generation != run.best_per_generation.len() {
            return Err(BenchError::Results {
                line,
                message: format!("expected generation {}", run.best_per_generation.len()),
            });
        }
        run.best_per_generation.push(row.best_fitness);
        if row.success == 1 && run.success_generation.is_none() {
            run.success_generation = Some(row.generation);
        }
    }
    Ok((config, runs))
}

/// Plain-text summary for standard output.
pub fn render_summary(summary: &Summary) -> String {
    let mut s = format!(
        "runs: {}\nsuccesses: {}\nsuccess rate: {:.4}\nfinal best fitness: mean {:.6e}, stddev {:.6e}\n",
        summary.runs, summary.successes, summary.success_rate, summary.mean_best, summary.std_best
    );
    match &summary.effort {
        Some(e) => s.push_str(&format!(
            "effort (z = {}): {} individuals at generation {}\n",
            summary.z, e.minimum, e.best_generation
        )),
        None => s.push_str("effort: undefined (no successful run)\n"),
    }
    s
}
