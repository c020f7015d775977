//! Linear programs over a population array. A program is run after a
//! random initialisation of every slot, inside a loop of a fixed number of
//! generations; its result is the best objective value ever stored.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{MetaOp, MicroProblem};
use crate::engine::{steady_state, EngineConfig, RunResult, Variation};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// `Pop[dest] = op(Pop[a], Pop[b])`; `b` is ignored by `Mutate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LgpEaInstruction {
    pub dest: usize,
    pub op: MetaOp,
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LgpEaProgram {
    /// Size of the population array.
    pub slots: usize,
    pub instructions: Vec<LgpEaInstruction>,
}

impl LgpEaProgram {
    pub fn new(slots: usize, instructions: Vec<LgpEaInstruction>) -> Result<Self> {
        let p = Self { slots, instructions };
        if slots == 0 || !p.is_valid() {
            return Err(Error::InvalidParameter("instruction index outside the population array".into()));
        }
        Ok(p)
    }

    pub fn is_valid(&self) -> bool {
        self.instructions
            .iter()
            .all(|i| i.dest < self.slots && i.a < self.slots && i.b < self.slots)
    }

    /// C-like listing including the fixed prologue and loop.
    pub fn render(&self) -> String {
        let mut out = format!("void LGP_Program(Chromosome Pop[{}])\n{{\n", self.slots);
        out.push_str("  Randomly_initialize_the_population();\n");
        out.push_str("  for (int k = 0; k < MaxGenerations; k++) {\n");
        for i in &self.instructions {
            let body = match i.op {
                MetaOp::Mutate => format!("Mutate(Pop[{}])", i.a),
                op => format!("{}(Pop[{}], Pop[{}])", op.name(), i.a, i.b),
            };
            out.push_str(&format!("    Pop[{}] = {};\n", i.dest, body));
        }
        out.push_str("  }\n}\n");
        out
    }

    /// One micro-run; returns the best objective value seen.
    pub fn run<P: MicroProblem>(&self, problem: &P, generations: usize, rng: &mut SimRng) -> f64 {
        let mut pop: Vec<P::Solution> = (0..self.slots).map(|_| problem.initialize(rng)).collect();
        let mut values: Vec<f64> = pop.iter().map(|s| problem.evaluate(s)).collect();
        let mut best = values.iter().copied().fold(f64::INFINITY, f64::min);
        for _ in 0..generations {
            for i in &self.instructions {
                let (s, v) = match i.op {
                    MetaOp::Select => {
                        let pick = if values[i.b] < values[i.a] { i.b } else { i.a };
                        (pop[pick].clone(), values[pick])
                    }
                    MetaOp::Crossover => {
                        let s = problem.crossover(&pop[i.a], &pop[i.b], rng);
                        let v = problem.evaluate(&s);
                        (s, v)
                    }
                    MetaOp::Mutate => {
                        let s = problem.mutate(&pop[i.a], rng);
                        let v = problem.evaluate(&s);
                        (s, v)
                    }
                };
                best = best.min(v);
                pop[i.dest] = s;
                values[i.dest] = v;
            }
        }
        best
    }

    /// Mean best value over `runs` micro-runs.
    pub fn fitness<P: MicroProblem>(&self, problem: &P, generations: usize, runs: usize, rng: &mut SimRng) -> f64 {
        assert!(runs >= 1, "at least one micro-run");
        (0..runs).map(|_| self.run(problem, generations, rng)).sum::<f64>() / runs as f64
    }
}

/// Variation operators for population-array programs: uniform crossover of
/// instructions and redrawing one field of randomly chosen instructions.
#[derive(Debug, Clone)]
pub struct LgpEaOps {
    pub slots: usize,
    pub length: usize,
    pub mutations: usize,
}

impl LgpEaOps {
    fn random_instruction(&self, rng: &mut SimRng) -> LgpEaInstruction {
        LgpEaInstruction {
            dest: rng.random_range(0..self.slots),
            op: MetaOp::ALL[rng.random_range(0..3)],
            a: rng.random_range(0..self.slots),
            b: rng.random_range(0..self.slots),
        }
    }
}

impl Variation for LgpEaOps {
    type Genome = LgpEaProgram;

    fn random(&self, rng: &mut SimRng) -> LgpEaProgram {
        LgpEaProgram {
            slots: self.slots,
            instructions: (0..self.length).map(|_| self.random_instruction(rng)).collect(),
        }
    }

    fn crossover(&self, a: &LgpEaProgram, b: &LgpEaProgram, rng: &mut SimRng) -> (LgpEaProgram, LgpEaProgram) {
        let (mut x, mut y) = (a.clone(), b.clone());
        for (p, q) in x.instructions.iter_mut().zip(y.instructions.iter_mut()) {
            if rng.random_bool(0.5) {
                std::mem::swap(p, q);
            }
        }
        (x, y)
    }

    fn mutate(&self, g: &mut LgpEaProgram, rng: &mut SimRng) {
        if g.instructions.is_empty() {
            return;
        }
        for _ in 0..self.mutations {
            let k = rng.random_range(0..g.instructions.len());
            let ins = &mut g.instructions[k];
            match rng.random_range(0..4) {
                0 => ins.dest = rng.random_range(0..self.slots),
                1 => ins.op = MetaOp::ALL[rng.random_range(0..3)],
                2 => ins.a = rng.random_range(0..self.slots),
                _ => ins.b = rng.random_range(0..self.slots),
            }
        }
    }
}

/// Evolves population-array programs for `problem`.
pub fn run_meta_lgp<P: MicroProblem>(
    problem: &P,
    ops: &LgpEaOps,
    generations: usize,
    runs: usize,
    config: &EngineConfig,
    rng: &mut SimRng,
) -> Result<RunResult<LgpEaProgram>> {
    config.validate()?;
    if runs == 0 || ops.slots == 0 {
        return Err(Error::InvalidParameter("micro runs and slots must be positive".into()));
    }
    Ok(steady_state(ops, config, |p, rng| p.fitness(problem, generations, runs, rng), rng))
}
