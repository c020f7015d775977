//! Symbolic regression targets and fitness-case generation.

use rand::Rng;

use crate::engine::{steady_state, EngineConfig, RunResult};
use crate::error::{Error, Result};
use crate::lgp::{fitness_ms, fitness_ss, LgpOp, LgpOps, LgpProgram, RegisterInit, RegisterLayout};
use crate::mep::{evaluate_all, fitness_regression, Chromosome, FitnessCases, MepOps};
use crate::primitives::{real, PrimitiveSet};
use crate::rng::SimRng;

/// Default success threshold on the summed absolute error.
pub const SUCCESS_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct RegressionProblem {
    pub name: &'static str,
    pub target: fn(f64) -> f64,
    pub domain: (f64, f64),
    pub num_cases: usize,
    /// Constant terminals available beside the variable `x`.
    pub constants: Vec<f64>,
    pub functions: Vec<&'static str>,
}

impl RegressionProblem {
    pub fn with_constants(mut self, constants: Vec<f64>) -> Self {
        self.constants = constants;
        self
    }

    pub fn with_functions(mut self, functions: Vec<&'static str>) -> Self {
        self.functions = functions;
        self
    }

    pub fn with_cases(mut self, num_cases: usize) -> Self {
        self.num_cases = num_cases;
        self
    }

    /// Terminal names: `x` followed by the constants.
    pub fn terminals(&self) -> Vec<String> {
        std::iter::once("x".to_string())
            .chain(self.constants.iter().map(|c| format!("{c:?}")))
            .collect()
    }

    pub fn primitive_set(&self) -> Result<PrimitiveSet<f64>> {
        let functions = self
            .functions
            .iter()
            .map(|f| real::by_name(f))
            .collect::<Result<Vec<_>>>()?;
        PrimitiveSet::new(self.terminals(), functions)
    }

    /// Inputs sampled uniformly in the domain.
    pub fn sample_inputs<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let (lo, hi) = self.domain;
        (0..self.num_cases).map(|_| rng.random_range(lo..=hi)).collect()
    }

    /// Uniform samples in the domain with their targets.
    pub fn make_cases<R: Rng + ?Sized>(&self, rng: &mut R) -> (FitnessCases<f64>, Vec<f64>) {
        let xs = self.sample_inputs(rng);
        self.cases_at(&xs)
    }

    pub fn cases_at(&self, xs: &[f64]) -> (FitnessCases<f64>, Vec<f64>) {
        let mut columns = vec![xs.to_vec()];
        for &c in &self.constants {
            columns.push(vec![c; xs.len()]);
        }
        let targets = xs.iter().map(|&x| (self.target)(x)).collect();
        (FitnessCases::from_columns(columns), targets)
    }
}

pub fn quartic(x: f64) -> f64 {
    x.powi(4) + x.powi(3) + x.powi(2) + x
}

pub fn sextic(x: f64) -> f64 {
    x.powi(6) - 2.0 * x.powi(4) + x.powi(2)
}

pub fn sin_of_sum(x: f64) -> f64 {
    (x.powi(4) + x.powi(2)).sin()
}

pub fn sum_of_sins(x: f64) -> f64 {
    x.powi(4).sin() + x.powi(2).sin()
}

fn problem(
    name: &'static str,
    target: fn(f64) -> f64,
    domain: (f64, f64),
    num_cases: usize,
    functions: Vec<&'static str>,
) -> RegressionProblem {
    RegressionProblem {
        name,
        target,
        domain,
        num_cases,
        constants: Vec::new(),
        functions,
    }
}

/// All named regression problems.
pub fn registry() -> Vec<RegressionProblem> {
    let arith = vec!["+", "-", "*", "/"];
    let lgp = vec!["+", "-", "*", "/", "sin"];
    vec![
        problem("quartic", quartic, (-1.0, 1.0), 20, arith.clone()),
        problem("sextic", sextic, (-1.0, 1.0), 20, arith.clone()),
        problem("gep_comparison_quartic", quartic, (0.0, 20.0), 10, arith),
        problem("mslgp_f1", quartic, (0.0, 1.0), 20, lgp.clone()),
        problem("mslgp_f2", sextic, (0.0, 1.0), 20, lgp.clone()),
        problem("mslgp_f3", sin_of_sum, (0.0, 1.0), 20, lgp.clone()),
        problem("mslgp_f4", sum_of_sins, (0.0, 1.0), 20, lgp),
    ]
}

pub fn lookup(name: &str) -> Result<RegressionProblem> {
    registry()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownProblem(name.to_string()))
}

/// One MEP run on a regression problem with freshly sampled cases.
pub fn run_mep_regression(
    problem: &RegressionProblem,
    length: usize,
    config: &EngineConfig,
    rng: &mut SimRng,
) -> Result<RunResult<Chromosome>> {
    config.validate()?;
    let set = problem.primitive_set()?;
    let (cases, targets) = problem.make_cases(rng);
    let ops = MepOps::new(set.signature().clone(), length, config.crossover, config.mutation);
    Ok(steady_state(
        &ops,
        config,
        |c, rng| fitness_regression(&evaluate_all(c, &set, &cases, rng), &targets).0,
        rng,
    ))
}

/// Which LGP fitness convention drives selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LgpFitness {
    /// Best checkpoint over all instructions.
    MultiSolution,
    /// Final value of the first supplementary register.
    SingleSolution,
}

/// One LGP run on a regression problem with freshly sampled cases.
pub fn run_lgp_regression(
    problem: &RegressionProblem,
    length: usize,
    mutations: usize,
    mode: LgpFitness,
    init: RegisterInit,
    config: &EngineConfig,
    rng: &mut SimRng,
) -> Result<RunResult<LgpProgram>> {
    config.validate()?;
    if !problem.constants.is_empty() {
        return Err(Error::InvalidParameter("LGP runs take no constants".into()));
    }
    let ops = problem
        .functions
        .iter()
        .map(|f| LgpOp::by_name(f))
        .collect::<Result<Vec<_>>>()?;
    let layout = RegisterLayout::new(1, 4, ops)?.with_init(init);
    let xs = problem.sample_inputs(rng);
    let cases: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let targets: Vec<f64> = xs.iter().map(|&x| (problem.target)(x)).collect();
    let output = layout.first_supplementary();
    let ops = LgpOps {
        layout,
        length,
        mutations,
    };
    Ok(steady_state(
        &ops,
        config,
        |p, _| match mode {
            LgpFitness::MultiSolution => fitness_ms(p, &ops.layout, &cases, &targets).0,
            LgpFitness::SingleSolution => fitness_ss(p, &ops.layout, &cases, &targets, output),
        },
        rng,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn closed_forms() {
        assert_eq!(quartic(1.0), 4.0);
        assert_eq!(sextic(0.0), 0.0);
        assert_eq!(sin_of_sum(0.0), 0.0);
        assert!((sextic(1.0)).abs() < 1e-12);
    }

    #[test]
    fn registry_lookup() {
        let q = lookup("quartic").unwrap();
        assert_eq!(q.domain, (-1.0, 1.0));
        assert_eq!(q.num_cases, 20);
        assert_eq!((lookup("sextic").unwrap().target)(2.0), 64.0 - 32.0 + 4.0);
        assert_eq!(lookup("gep_comparison_quartic").unwrap().num_cases, 10);
        assert!(matches!(lookup("nope"), Err(Error::UnknownProblem(_))));
    }

    #[test]
    fn cases_within_domain_and_targets_exact() {
        let p = lookup("gep_comparison_quartic").unwrap();
        let (cases, targets) = p.make_cases(&mut seeded(3));
        assert_eq!(targets.len(), cases.num_cases());
        for (&x, &t) in cases.column(0).iter().zip(&targets) {
            assert!((0.0..=20.0).contains(&x));
            assert!((t - quartic(x)).abs() <= 1e-12 * t.abs().max(1.0));
        }
    }

    #[test]
    fn constants_become_terminal_columns() {
        let p = lookup("sextic").unwrap().with_constants(vec![1.0]);
        assert_eq!(p.terminals(), vec!["x", "1.0"]);
        let (cases, _) = p.make_cases(&mut seeded(1));
        assert!(cases.column(1).iter().all(|&c| c == 1.0));
    }
}
