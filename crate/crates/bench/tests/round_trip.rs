use mep_bench::{read_results_csv, run_experiment, write_results_csv, ExperimentConfig};

const CONFIG: &str = r#"{
    "engine": "mep",
    "problem": {"name": "quartic", "length": 20},
    "engine_config": {
        "population_size": 20, "generations": 10, "crossover": "uniform",
        "crossover_probability": 0.9, "mutation": {"symbols": 2}, "tournament_size": 2
    },
    "runs": 5,
    "master_seed": 3
}"#;

#[test]
fn results_round_trip_through_csv() {
    let cfg = ExperimentConfig::from_json(CONFIG).unwrap();
    let results = run_experiment(&cfg).unwrap();
    let mut buf = Vec::new();
    write_results_csv(&results, &mut buf).unwrap();
    let (echo, runs) = read_results_csv(buf.as_slice()).unwrap();
    assert_eq!(echo.unwrap(), results.config);
    assert_eq!(runs.len(), 5);
    for (a, b) in runs.iter().zip(&results.runs) {
        assert_eq!(a.best_per_generation, b.best_per_generation);
        assert_eq!(a.success_generation, b.success_generation);
    }
}

#[test]
fn identical_seeds_give_identical_files() {
    let cfg = ExperimentConfig::from_json(CONFIG).unwrap();
    let write = || {
        let mut buf = Vec::new();
        write_results_csv(&run_experiment(&cfg).unwrap(), &mut buf).unwrap();
        buf
    };
    assert_eq!(write(), write());
}

#[test]
fn invalid_configs_are_config_errors() {
    let mut cfg = ExperimentConfig::from_json(CONFIG).unwrap();
    cfg.problem.name = "ifgp_only".into();
    assert!(run_experiment(&cfg).unwrap_err().is_config());
    let unknown = CONFIG.replace("\"runs\": 5", "\"runs\": 5, \"extra\": 1");
    assert!(ExperimentConfig::from_json(&unknown).unwrap_err().is_config());
}

#[test]
fn shipped_configs_validate() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert!(count >= 5);
}
