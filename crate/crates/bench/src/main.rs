use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mep_bench::{
    read_results_csv, render_summary, run_experiment, run_sweep, success_vs_parameter, summarize, write_outputs,
    BenchError, ExperimentConfig, Outputs, PlotTable,
};
use multiexpr::circuit::{
    adder_target, boolean_set, gate_count, gate_set, knapsack_target, multiplexer_target, multiplier_target,
    parity_target, CircuitProblem,
};
use multiexpr::engine::{steady_state, EngineConfig};
use multiexpr::games::nim::{bouton, bouton_modk, modk_cap, NimProblem, NimState, NimTree};
use multiexpr::games::ttt::{reference_f1, reference_f2, reference_f3, ttt_fitness, Preference, TttProblem};
use multiexpr::mep::{decode_expression, CrossoverKind, Layout, MepOps, MutationSpec};
use multiexpr::meta_ea::{decode_meta, meta_fitness, render_meta, run_meta_mep, test_function, MetaAggregation, RealProblem};
use multiexpr::nfl::{compare, evolve_matched_function, AlgorithmSpec, NflBudget, NflEvolverConfig};
use multiexpr::rng::{run_batch, seeded};
use multiexpr::stats::koza_effort;
use multiexpr::tsp::{
    mst_tour, nn_tour, random_graph_set, random_ti_graph, run_tsp_heuristic, tour_length, tsplib_load,
    TspHeuristicConfig,
};

#[derive(Parser)]
#[command(name = "mep-bench", version, about = "Seeded evolutionary experiments with the multiexpr toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; run k uses seed ^ k.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of independent runs.
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Output directory (or file, for single-table commands).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by --config.
    Run,
    /// Koza effort table from a results CSV or from running --config.
    Effort {
        /// Results CSV written by `run`.
        #[arg(long)]
        results: Option<PathBuf>,
        /// Population size M; read from the echoed config when omitted.
        #[arg(long)]
        population: Option<u64>,
        #[arg(long)]
        z: Option<f64>,
    },
    /// Evolve digital circuits with MEP, or dump their truth tables.
    Circuits(CircuitArgs),
    /// Nim and tic-tac-toe strategies.
    Games {
        #[arg(value_enum)]
        game: Game,
        /// Score the reference formulas instead of evolving.
        #[arg(long)]
        check: bool,
        /// Nim heap sizes.
        #[arg(long, value_delimiter = ',', default_value = "4,4,4,4")]
        heaps: Vec<u32>,
        #[arg(long)]
        generations: Option<usize>,
    },
    /// Evolve a TSP construction heuristic and compare it with NN and MST.
    Tsp {
        /// TSPLIB EUC_2D instance to report on and to test against.
        #[arg(long)]
        tsplib: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        population: usize,
        #[arg(long, default_value_t = 25)]
        generations: usize,
        /// Fresh random test graphs.
        #[arg(long, default_value_t = 100)]
        test_graphs: usize,
        #[arg(long, default_value_t = 100)]
        test_nodes: usize,
    },
    /// Evolve an evolutionary algorithm for a real-valued test function.
    Meta {
        #[arg(long, default_value = "griewangk")]
        function: String,
        #[arg(long, default_value_t = 5)]
        dimension: usize,
        #[arg(long, default_value_t = 300)]
        genes: usize,
        #[arg(long, default_value_t = 20)]
        population: usize,
        #[arg(long, default_value_t = 20)]
        generations: usize,
        #[arg(long, default_value_t = 50)]
        micro_runs: usize,
    },
    /// Compare two archive-search algorithms, or evolve a function that
    /// favours the first.
    Nfl {
        #[arg(long, default_value = "a2")]
        a: String,
        #[arg(long, default_value = "a1")]
        b: String,
        #[arg(long, value_enum, default_value = "cubic")]
        function: NflFunction,
        #[arg(long)]
        evolve: bool,
        #[arg(long, default_value_t = 100)]
        max_steps: usize,
        #[arg(long, default_value_t = 20)]
        max_mutations: usize,
    },
}

#[derive(Args)]
struct CircuitArgs {
    #[arg(long, value_enum, default_value = "even-parity")]
    target: Target,
    #[arg(long, default_value_t = 3)]
    bits: usize,
    /// Knapsack target sum.
    #[arg(long, default_value_t = 10)]
    sum: usize,
    /// Gate ids; overrides --functions.
    #[arg(long, value_delimiter = ',')]
    gates: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', default_value = "AND,OR,NAND,NOR")]
    functions: Vec<String>,
    #[arg(long, default_value_t = 100)]
    length: usize,
    #[arg(long, default_value_t = 100)]
    population: usize,
    #[arg(long, default_value_t = 100)]
    generations: usize,
    /// Write the truth table to --out and stop.
    #[arg(long)]
    table_only: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    EvenParity,
    Multiplexer,
    Adder,
    Multiplier,
    Knapsack,
}

#[derive(Clone, Copy, ValueEnum)]
enum Game {
    Nim,
    Ttt,
}

#[derive(Clone, Copy, ValueEnum)]
enum NflFunction {
    /// f(x) = 0
    Zero,
    /// f(x) = -6x^3 - x
    Cubic,
    /// f(x) = x - 2x^5
    Quintic,
}

impl NflFunction {
    fn eval(self, x: f64) -> f64 {
        match self {
            NflFunction::Zero => 0.0,
            NflFunction::Cubic => -6.0 * x.powi(3) - x,
            NflFunction::Quintic => x - 2.0 * x.powi(5),
        }
    }
}

/// An error caused by the user's description of the experiment.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_error(e: impl Into<anyhow::Error>) -> anyhow::Error {
    anyhow::Error::new(ConfigError(format!("{:#}", e.into())))
}

fn bench(e: BenchError) -> anyhow::Error {
    if e.is_config() {
        config_error(e)
    } else {
        e.into()
    }
}

fn engine(population: usize, generations: usize, crossover: CrossoverKind, mutation: MutationSpec) -> EngineConfig {
    EngineConfig {
        population_size: population,
        generations,
        crossover,
        crossover_probability: 0.9,
        mutation,
        tournament_size: 2,
        elitism: 0,
        success_threshold: Some(0.5),
        stop_on_success: false,
        seed: 0,
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let path = common.config.as_ref().ok_or_else(|| config_error(anyhow::anyhow!("--config is required")))?;
    let mut cfg = ExperimentConfig::load(path).map_err(bench)?;
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if let Some(r) = common.runs {
        cfg.runs = r;
    }
    if let Some(dir) = &common.out {
        cfg.outputs = Outputs::in_dir(dir);
    }
    cfg.validate().map_err(bench)?;
    Ok(cfg)
}

fn write_table(table: &PlotTable, path: &Path, title: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    table.write_csv(std::fs::File::create(path)?)?;
    std::fs::write(path.with_extension("svg"), mep_bench::render_svg(table, title))?;
    Ok(())
}

fn cmd_run(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    println!("# config {}", cfg.resolved().to_json());
    if let Some(sweep) = &cfg.sweep {
        let points = run_sweep(&cfg).map_err(bench)?;
        let label = serde_json::to_value(sweep.field)?.as_str().unwrap_or("value").to_string();
        for (v, r) in &points {
            println!("{label} = {v}: success rate {:.4}", r.summary().success_rate);
        }
        let table = success_vs_parameter(&label, &points);
        let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
        write_table(&table, &dir.join(format!("success_vs_{label}.csv")), "success rate")?;
        return Ok(());
    }
    let start = std::time::Instant::now();
    let results = run_experiment(&cfg).map_err(bench)?;
    write_outputs(&results, &results.config.outputs).map_err(bench)?;
    print!("{}", render_summary(&results.summary()));
    println!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn cmd_effort(common: &Common, results: Option<&Path>, population: Option<u64>, z: Option<f64>) -> Result<()> {
    let (cfg, runs) = match results {
        Some(p) => {
            let file = std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
            let (cfg, runs) = read_results_csv(file).map_err(bench)?;
            (cfg, runs)
        }
        None => {
            let r = run_experiment(&load_config(common)?).map_err(bench)?;
            (Some(r.config), r.runs)
        }
    };
    let m = population
        .or(cfg.as_ref().map(|c| c.evolution.population_size as u64))
        .ok_or_else(|| config_error(anyhow::anyhow!("--population is required without an echoed config")))?;
    let z = z.or(cfg.as_ref().and_then(|c| c.z)).unwrap_or(0.99);
    let generations = runs.iter().map(|r| r.best_per_generation.len().saturating_sub(1)).max().unwrap_or(0);
    let first: Vec<Option<usize>> = runs.iter().map(|r| r.success_generation).collect();
    let effort = koza_effort(&first, m, generations.max(1), z).map_err(config_error)?;
    let mut table = PlotTable::new("generation", &["probability", "runs_required", "individuals"]);
    println!("generation,probability,runs_required,individuals");
    for p in &effort.curve {
        let r = p.runs_required.map_or(f64::NAN, |r| r as f64);
        let i = p.individuals.map_or(f64::NAN, |i| i as f64);
        println!("{},{},{},{}", p.generation, p.probability, r, i);
        table.rows.push((p.generation as f64, vec![p.probability, r, i]));
    }
    println!("minimum effort {} at generation {}", effort.minimum, effort.best_generation);
    if let Some(cfg) = &cfg {
        print!("{}", render_summary(&summarize(cfg, &runs)));
    }
    if let Some(out) = &common.out {
        write_table(&table, out, "computational effort")?;
    }
    Ok(())
}

fn cmd_circuits(common: &Common, a: &CircuitArgs) -> Result<()> {
    let table = match a.target {
        Target::EvenParity => parity_target(a.bits),
        Target::Multiplexer => multiplexer_target(a.bits),
        Target::Adder => adder_target(a.bits, false),
        Target::Multiplier => multiplier_target(a.bits),
        Target::Knapsack => knapsack_target(a.bits, a.sum),
    }
    .map_err(config_error)?;
    if a.table_only {
        match &common.out {
            Some(p) => table.write_csv(std::fs::File::create(p)?)?,
            None => table.write_csv(std::io::stdout().lock())?,
        }
        return Ok(());
    }
    let set = match &a.gates {
        Some(g) => gate_set(&table, g),
        None => boolean_set(&table, &a.functions.iter().map(String::as_str).collect::<Vec<_>>()),
    }
    .map_err(config_error)?;
    if a.length <= table.num_inputs() {
        return Err(config_error(anyhow::anyhow!("length must exceed the {} inputs", table.num_inputs())));
    }
    let problem = CircuitProblem::new(table, set);
    let cfg = EngineConfig {
        stop_on_success: true,
        ..engine(a.population, a.generations, CrossoverKind::Uniform, MutationSpec::Symbols(3))
    };
    let ops = MepOps::new(problem.set.signature().clone(), a.length, cfg.crossover, cfg.mutation)
        .with_layout(Layout::TerminalsFirst);
    let runs = common.runs.unwrap_or(10);
    let results = run_batch(runs, common.seed.unwrap_or(0xC1C), |_, rng| {
        let mut r = steady_state(&ops, &cfg, |c, r| problem.fitness(c, r), rng);
        let assignment = problem.assignment(&mut r.best, &mut seeded(0)).ok();
        (r, assignment)
    });
    let mut successes = 0;
    for (k, (r, a)) in results.iter().enumerate() {
        match (r.success_generation, a) {
            (Some(g), Some(a)) => {
                successes += 1;
                println!("run {k}: perfect at generation {g}, {} gates", gate_count(&r.best, &a.genes));
                for (q, &gene) in a.genes.iter().enumerate() {
                    println!("  {} = {}", problem.table.output_names[q], decode_expression(&r.best, &problem.set, gene));
                }
            }
            _ => println!("run {k}: best error {}", r.best_fitness),
        }
    }
    println!("success rate {successes}/{runs}");
    Ok(())
}

fn cmd_games(common: &Common, game: Game, check: bool, heaps: &[u32], generations: Option<usize>) -> Result<()> {
    let runs = common.runs.unwrap_or(10);
    let seed = common.seed.unwrap_or(0xAB00);
    match game {
        Game::Nim => {
            let initial = NimState::new(heaps.to_vec());
            if check {
                let tree = NimTree::build(&initial, None);
                let labels: Vec<bool> = tree.states.iter().map(|s| bouton(s) == 0).collect();
                println!("a1 xor a2 xor ... : {} violations on {} configurations", tree.violations(&labels), tree.len());
                let capped = NimTree::build(&initial, Some(modk_cap(2)));
                let labels: Vec<bool> = capped.states.iter().map(|s| bouton_modk(s, 2) == 0).collect();
                println!("(a1 mod k) xor ... with k = 2: {} violations", capped.violations(&labels));
                return Ok(());
            }
            let problem = NimProblem::new(&initial, None, None).map_err(config_error)?;
            let cfg = engine(100, generations.unwrap_or(100), CrossoverKind::Uniform, MutationSpec::Symbols(2));
            let ops = MepOps::new(problem.set.signature().clone(), 15, cfg.crossover, cfg.mutation);
            let results = run_batch(runs, seed, |_, rng| {
                let mut r = steady_state(&ops, &cfg, |c, r| problem.fitness(c, r).0, rng);
                let (v, gene) = problem.fitness(&mut r.best, &mut seeded(0));
                (v, decode_expression(&r.best, &problem.set, gene))
            });
            for (k, (v, f)) in results.iter().enumerate() {
                println!("run {k}: {v} violations  F = {f}");
            }
        }
        Game::Ttt => {
            if check {
                for (name, f) in [("F1", reference_f1 as fn(&[f64; 9]) -> f64), ("F2", reference_f2), ("F3", reference_f3)] {
                    println!("{name}: {} lost games", ttt_fitness(f, Preference::Max));
                }
                return Ok(());
            }
            let problem = TttProblem::new(Preference::Max).map_err(config_error)?;
            let cfg = EngineConfig {
                elitism: 1,
                stop_on_success: true,
                ..engine(50, generations.unwrap_or(100), CrossoverKind::TwoPoint, MutationSpec::PerGene(0.05))
            };
            let ops = MepOps::new(problem.set.signature().clone(), 50, cfg.crossover, cfg.mutation);
            let results = run_batch(runs, seed, |_, rng| {
                let mut r = steady_state(&ops, &cfg, |c, r| problem.fitness(c, r).0, rng);
                let (v, gene) = problem.fitness(&mut r.best, &mut seeded(0));
                (v, decode_expression(&r.best, &problem.set, gene))
            });
            for (k, (v, f)) in results.iter().enumerate() {
                println!("run {k}: {v} lost games  F = {f}");
            }
        }
    }
    Ok(())
}

fn cmd_tsp(common: &Common, tsplib: Option<&Path>, population: usize, generations: usize, tests: usize, nodes: usize) -> Result<()> {
    let instance = tsplib.map(tsplib_load).transpose().map_err(config_error)?;
    if let Some(inst) = &instance {
        let g = &inst.graph;
        println!("{}: {} cities", inst.name, g.len());
        println!("nearest neighbor from 0: {}", tour_length(g, &nn_tour(g, 0)));
        println!("MST preorder: {}", tour_length(g, &mst_tour(g)));
    }
    let mut rng = seeded(common.seed.unwrap_or(77));
    let train = random_graph_set(30, 3, 30, &mut rng);
    let valid = random_graph_set(5, 3, 60, &mut rng);
    let test: Vec<_> = (0..tests).map(|_| random_ti_graph(nodes, &mut rng)).collect();
    let hcfg = TspHeuristicConfig::default();
    let cfg = EngineConfig {
        mutation: MutationSpec::PerGene(0.1),
        elitism: 1,
        success_threshold: None,
        ..engine(population, generations, CrossoverKind::OnePoint, MutationSpec::PerGene(0.1))
    };
    let run = run_tsp_heuristic(&train, &valid, &hcfg, &cfg, &mut rng).map_err(config_error)?;
    let h = run.heuristic(&hcfg)?;
    println!("evolved heuristic: {}", h.expression());
    let (mut nn, mut mst) = (0, 0);
    for g in &test {
        let l = h.tour(g).1;
        nn += usize::from(l < tour_length(g, &nn_tour(g, 0)));
        mst += usize::from(l < tour_length(g, &mst_tour(g)));
    }
    println!("shorter than NN on {nn}/{tests}, shorter than MST on {mst}/{tests} random {nodes}-node graphs");
    if let Some(inst) = &instance {
        println!("evolved heuristic on {}: {}", inst.name, h.tour(&inst.graph).1);
    }
    Ok(())
}

fn cmd_meta(
    common: &Common,
    function: &str,
    dimension: usize,
    genes: usize,
    population: usize,
    generations: usize,
    micro_runs: usize,
) -> Result<()> {
    let f = test_function(function).map_err(config_error)?;
    let problem = RealProblem::new(f, dimension, 0.5).map_err(config_error)?;
    let cfg = EngineConfig {
        crossover_probability: 0.7,
        success_threshold: None,
        ..engine(population, generations, CrossoverKind::Uniform, MutationSpec::Symbols(5))
    };
    let agg = MetaAggregation::BestPerRun;
    let runs = common.runs.unwrap_or(1);
    let results = run_batch(runs, common.seed.unwrap_or(0x3E7A), |_, rng| run_meta_mep(&problem, genes, micro_runs, agg, &cfg, rng));
    for (k, r) in results.into_iter().enumerate() {
        let r = r.map_err(config_error)?;
        let (_, gene) = meta_fitness(&r.best, &problem, micro_runs, agg, &mut seeded(1));
        println!(
            "run {k}: fitness {:.4} (generation 0: {:.4})",
            r.best_fitness, r.best_per_generation[0]
        );
        println!("{}", render_meta(&decode_meta(&r.best, gene)));
    }
    Ok(())
}

fn cmd_nfl(common: &Common, a: &str, b: &str, function: NflFunction, evolve: bool, budget: NflBudget) -> Result<()> {
    let a = AlgorithmSpec::by_name(a).map_err(config_error)?;
    let b = AlgorithmSpec::by_name(b).map_err(config_error)?;
    if budget.max_steps == 0 {
        return Err(config_error(anyhow::anyhow!("max steps must be positive")));
    }
    let runs = common.runs.unwrap_or(500);
    let mut rng = seeded(common.seed.unwrap_or(0x7F1));
    if evolve {
        let cfg = NflEvolverConfig {
            runs,
            budget,
            ..NflEvolverConfig::default()
        };
        let eng = EngineConfig {
            success_threshold: None,
            ..engine(50, 10, CrossoverKind::TwoPoint, MutationSpec::Symbols(1))
        };
        let m = evolve_matched_function(&a, &b, &cfg, &eng, &mut rng).map_err(config_error)?;
        println!("f(x) = {}", m.expression);
        println!("compare({}, {}) = {}", a.name, b.name, m.score);
        return Ok(());
    }
    let c = compare(&a, &b, &mut |x| function.eval(x), runs, budget, &mut rng);
    println!(
        "compare({}, {}) = {} (standard error {}, {} runs, {} steps, {} mutations)",
        a.name, b.name, c.mean, c.std_error, c.runs, budget.max_steps, budget.max_mutations
    );
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    let common = &cli.common;
    match &cli.command {
        Command::Run => cmd_run(common),
        Command::Effort { results, population, z } => cmd_effort(common, results.as_deref(), *population, *z),
        Command::Circuits(a) => cmd_circuits(common, a),
        Command::Games {
            game,
            check,
            heaps,
            generations,
        } => cmd_games(common, *game, *check, heaps, *generations),
        Command::Tsp {
            tsplib,
            population,
            generations,
            test_graphs,
            test_nodes,
        } => cmd_tsp(common, tsplib.as_deref(), *population, *generations, *test_graphs, *test_nodes),
        Command::Meta {
            function,
            dimension,
            genes,
            population,
            generations,
            micro_runs,
        } => cmd_meta(common, function, *dimension, *genes, *population, *generations, *micro_runs),
        Command::Nfl {
            a,
            b,
            function,
            evolve,
            max_steps,
            max_mutations,
        } => {
            let budget = NflBudget {
                max_steps: *max_steps,
                max_mutations: *max_mutations,
            };
            cmd_nfl(common, a, b, *function, *evolve, budget)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
