//! JSON experiment descriptions.

use std::path::{Path, PathBuf};

use multiexpr::engine::EngineConfig;
use multiexpr::lgp::RegisterInit;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Mep,
    Mslgp,
    Sslgp,
    Ifgp,
}

/// Problem name plus the parameters the engines read. Unset fields are
/// filled by [`ExperimentConfig::resolved`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    /// A regression name (`quartic`, `sextic`, `mslgp_f1`, ...), a circuit
    /// (`even_parity`, `multiplexer`, `adder`, `multiplier`) or an IFGP
    /// dataset (`threshold`, `csv`).
    pub name: String,
    /// Chromosome length in genes, or program length in instructions.
    #[serde(default)]
    pub length: Option<usize>,
    #[serde(default)]
    pub num_cases: Option<usize>,
    #[serde(default)]
    pub functions: Option<Vec<String>>,
    /// Circuit width: parity arity, multiplexer address bits, adder or
    /// multiplier operand bits.
    #[serde(default)]
    pub bits: Option<usize>,
    /// Gate ids for circuits; overrides `functions`.
    #[serde(default)]
    pub gates: Option<Vec<usize>>,
    /// Instructions mutated per LGP offspring.
    #[serde(default)]
    pub mutations: Option<usize>,
    #[serde(default)]
    pub register_init: Option<RegisterInit>,
    /// Rows of the synthetic IFGP dataset.
    #[serde(default)]
    pub rows: Option<usize>,
    /// CSV file for the `csv` IFGP dataset (last column is the class).
    #[serde(default)]
    pub data: Option<PathBuf>,
    /// IFGP constants `2^-r ..= 2^r`.
    #[serde(default)]
    pub constant_range: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub results_csv: Option<PathBuf>,
    #[serde(default)]
    pub summary_json: Option<PathBuf>,
    #[serde(default)]
    pub plot_csv: Option<PathBuf>,
    #[serde(default)]
    pub plot_svg: Option<PathBuf>,
}

impl Outputs {
    /// Standard file names inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            results_csv: Some(dir.join("results.csv")),
            summary_json: Some(dir.join("summary.json")),
            plot_csv: Some(dir.join("fitness.csv")),
            plot_svg: Some(dir.join("fitness.svg")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepField {
    Length,
    PopulationSize,
    Generations,
}

/// Repeats the experiment once per value of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub field: SweepField,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub engine: EngineKind,
    pub problem: ProblemSpec,
    #[serde(rename = "engine_config")]
    pub evolution: EngineConfig,
    /// Number of independent runs.
    pub runs: usize,
    /// Success means best fitness strictly below this value.
    #[serde(default)]
    pub success_threshold: Option<f64>,
    pub master_seed: u64,
    /// Confidence level of the effort computation.
    #[serde(default)]
    pub z: Option<f64>,
    /// Not echoed into results files, so identical configs written to
    /// different places produce identical files.
    #[serde(default, skip_serializing)]
    pub outputs: Outputs,
    #[serde(default)]
    pub sweep: Option<Sweep>,
}

const REGRESSION_FUNCTIONS: [&str; 9] = ["+", "-", "*", "/", "sin", "cos", "exp", "min", "max"];

/// Maps a user-supplied name onto the static name table of the real
/// primitives.
pub(crate) fn static_function(name: &str) -> Result<&'static str> {
    REGRESSION_FUNCTIONS
        .iter()
        .copied()
        .find(|f| *f == name)
        .ok_or_else(|| BenchError::Config(format!("unknown regression function `{name}`")))
}

pub(crate) fn is_circuit(name: &str) -> bool {
    matches!(name, "even_parity" | "multiplexer" | "adder" | "multiplier")
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configs serialise")
    }

    /// A copy with every defaulted field written out.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        let p = &mut c.problem;
        let circuit = is_circuit(&p.name);
        let lgp = matches!(c.engine, EngineKind::Mslgp | EngineKind::Sslgp);
        if c.success_threshold.is_none() {
            c.success_threshold = Some(match c.engine {
                EngineKind::Ifgp => 0.5,
                _ if circuit => 0.5,
                _ => multiexpr::problems::SUCCESS_THRESHOLD,
            });
        }
        c.evolution.success_threshold = c.success_threshold;
        c.z.get_or_insert(0.99);
        p.length.get_or_insert(match c.engine {
            EngineKind::Mep | EngineKind::Ifgp => 30,
            EngineKind::Mslgp | EngineKind::Sslgp => 12,
        });
        if lgp {
            p.mutations.get_or_insert(2);
            p.register_init.get_or_insert(RegisterInit::Inputs);
        }
        match c.engine {
            EngineKind::Ifgp => {
                if p.name == "threshold" {
                    p.rows.get_or_insert(200);
                }
                p.constant_range.get_or_insert(20);
            }
            _ if circuit => {
                p.bits.get_or_insert(match p.name.as_str() {
                    "even_parity" => 3,
                    _ => 2,
                });
                if p.gates.is_none() {
                    p.functions
                        .get_or_insert_with(|| ["AND", "OR", "NAND", "NOR"].map(String::from).to_vec());
                }
            }
            _ => {
                if let Ok(base) = multiexpr::problems::lookup(&p.name) {
                    p.num_cases.get_or_insert(base.num_cases);
                    p.functions
                        .get_or_insert_with(|| base.functions.iter().map(|f| f.to_string()).collect());
                }
            }
        }
        c
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        self.evolution
            .validate()
            .map_err(|e| BenchError::Config(e.to_string()))?;
        if let Some(z) = self.z {
            if !(z > 0.0 && z < 1.0) {
                return bad(format!("z = {z} must lie in (0, 1)"));
            }
        }
        if let Some(t) = self.success_threshold {
            if t.is_nan() {
                return bad("success_threshold is NaN".into());
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return bad("sweep needs at least one value".into());
            }
        }
        let p = &self.problem;
        match self.engine {
            EngineKind::Ifgp => match p.name.as_str() {
                "threshold" => {}
                "csv" if p.data.is_some() => {}
                "csv" => return bad("the csv dataset needs a `data` path".into()),
                other => return bad(format!("unknown IFGP dataset `{other}`")),
            },
            EngineKind::Mep if is_circuit(&p.name) => {}
            _ => {
                multiexpr::problems::lookup(&p.name).map_err(|e| BenchError::Config(e.to_string()))?;
                if let Some(fs) = &p.functions {
                    for f in fs {
                        static_function(f)?;
                    }
                }
            }
        }
        if matches!(p.length, Some(0)) {
            return bad("length must be positive".into());
        }
        Ok(())
    }

    /// The config with one sweep value applied.
    pub fn with_sweep_value(&self, field: SweepField, value: usize) -> Self {
        let mut c = self.clone();
        match field {
            SweepField::Length => c.problem.length = Some(value),
            SweepField::PopulationSize => c.evolution.population_size = value,
            SweepField::Generations => c.evolution.generations = value,
        }
        c.sweep = None;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const QUARTIC: &str = r#"{
        "engine": "mep",
        "problem": {"name": "quartic", "length": 20},
        "engine_config": {
            "population_size": 20, "generations": 10, "crossover": "uniform",
            "crossover_probability": 0.9, "mutation": {"symbols": 2}, "tournament_size": 2
        },
        "runs": 4,
        "master_seed": 11
    }"#;

    #[test]
    fn parses_and_resolves() {
        let c = ExperimentConfig::from_json(QUARTIC).unwrap();
        c.validate().unwrap();
        let r = c.resolved();
        assert_eq!(r.success_threshold, Some(1e-4));
        assert_eq!(r.evolution.success_threshold, Some(1e-4));
        assert_eq!(r.problem.num_cases, Some(20));
        assert_eq!(r.problem.functions.as_ref().unwrap().len(), 4);
        assert_eq!(ExperimentConfig::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = ExperimentConfig::from_json(QUARTIC).unwrap();
        c.runs = 0;
        assert!(c.validate().unwrap_err().is_config());
        let mut c = ExperimentConfig::from_json(QUARTIC).unwrap();
        c.problem.name = "nope".into();
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::from_json("{\"engine\": \"gp\"}").unwrap_err().is_config());
        let unknown_field = QUARTIC.replace("\"runs\"", "\"runz\": 1, \"runs\"");
        assert!(ExperimentConfig::from_json(&unknown_field).is_err());
    }

    #[test]
    fn sweep_values_apply() {
        let c = ExperimentConfig::from_json(QUARTIC).unwrap();
        assert_eq!(c.with_sweep_value(SweepField::Length, 40).problem.length, Some(40));
        assert_eq!(c.with_sweep_value(SweepField::Generations, 7).evolution.generations, 7);
    }
}
