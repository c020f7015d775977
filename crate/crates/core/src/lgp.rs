//! Linear GP register machine with single- and multi-solution fitness.
//!
//! The register file holds the problem inputs followed by a number of
//! supplementary registers, reset before each fitness case either to 1.0 or
//! to cyclic copies of the inputs. Unless inputs are protected, any register
//! may be a destination. Multi-solution fitness checks the destination of
//! every instruction and keeps the best.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::Variation;
use crate::error::{Error, Result};
use crate::primitives::DIVISION_EPSILON;
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LgpOp {
    Add,
    Sub,
    Mul,
    Div,
    Sin,
}

impl LgpOp {
    pub fn arity(self) -> usize {
        match self {
            LgpOp::Sin => 1,
            _ => 2,
        }
    }

    /// Applies the operator; division by a value closer to zero than
    /// [`DIVISION_EPSILON`] returns the dividend.
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            LgpOp::Add => a + b,
            LgpOp::Sub => a - b,
            LgpOp::Mul => a * b,
            LgpOp::Div => {
                if b.abs() < DIVISION_EPSILON {
                    a
                } else {
                    a / b
                }
            }
            LgpOp::Sin => a.sin(),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            LgpOp::Add => "+",
            LgpOp::Sub => "-",
            LgpOp::Mul => "*",
            LgpOp::Div => "/",
            LgpOp::Sin => "sin",
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "+" | "add" => LgpOp::Add,
            "-" | "sub" => LgpOp::Sub,
            "*" | "mul" => LgpOp::Mul,
            "/" | "div" => LgpOp::Div,
            "sin" => LgpOp::Sin,
            other => return Err(Error::InvalidParameter(format!("unknown LGP operator {other:?}"))),
        })
    }

    pub fn standard() -> Vec<LgpOp> {
        vec![LgpOp::Add, LgpOp::Sub, LgpOp::Mul, LgpOp::Div, LgpOp::Sin]
    }
}

/// `r[dest] = r[a] op r[b]`; unary operators ignore `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instruction {
    pub dest: usize,
    pub op: LgpOp,
    pub a: usize,
    pub b: usize,
}

/// Initial content of the supplementary registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegisterInit {
    #[default]
    Ones,
    /// Supplementary register `j` starts as input `j mod num_inputs`.
    Inputs,
}

/// Register file description and operator set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterLayout {
    pub num_inputs: usize,
    pub num_supplementary: usize,
    pub ops: Vec<LgpOp>,
    /// Restrict destinations to supplementary registers.
    #[serde(default)]
    pub protect_inputs: bool,
    #[serde(default)]
    pub init: RegisterInit,
}

impl RegisterLayout {
    pub fn new(num_inputs: usize, num_supplementary: usize, ops: Vec<LgpOp>) -> Result<Self> {
        if num_supplementary == 0 {
            return Err(Error::InvalidParameter("at least one supplementary register".into()));
        }
        if ops.is_empty() {
            return Err(Error::InvalidParameter("empty LGP operator set".into()));
        }
        Ok(Self {
            num_inputs,
            num_supplementary,
            ops,
            protect_inputs: false,
            init: RegisterInit::Ones,
        })
    }

    /// Inputs plus four supplementary registers over the standard operators.
    pub fn standard(num_inputs: usize) -> Self {
        Self::new(num_inputs, 4, LgpOp::standard()).expect("valid standard layout")
    }

    pub fn with_protected_inputs(mut self, protect: bool) -> Self {
        self.protect_inputs = protect;
        self
    }

    pub fn with_init(mut self, init: RegisterInit) -> Self {
        self.init = init;
        self
    }

    /// Lowest register an instruction may write.
    pub fn first_writable(&self) -> usize {
        if self.protect_inputs {
            self.num_inputs
        } else {
            0
        }
    }

    pub fn num_registers(&self) -> usize {
        self.num_inputs + self.num_supplementary
    }

    /// Index of the first supplementary register, the default single-solution
    /// output.
    pub fn first_supplementary(&self) -> usize {
        self.num_inputs
    }

    pub fn is_valid(&self, ins: &Instruction) -> bool {
        ins.dest >= self.first_writable()
            && ins.dest < self.num_registers()
            && ins.a < self.num_registers()
            && ins.b < self.num_registers()
            && self.ops.contains(&ins.op)
    }

    pub fn random_instruction<R: Rng + ?Sized>(&self, rng: &mut R) -> Instruction {
        let n = self.num_registers();
        Instruction {
            dest: rng.random_range(self.first_writable()..n),
            op: self.ops[rng.random_range(0..self.ops.len())],
            a: rng.random_range(0..n),
            b: rng.random_range(0..n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LgpProgram {
    pub instructions: Vec<Instruction>,
}

impl LgpProgram {
    pub fn new(instructions: Vec<Instruction>) -> Self {
        Self { instructions }
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn is_valid(&self, layout: &RegisterLayout) -> bool {
        !self.is_empty() && self.instructions.iter().all(|i| layout.is_valid(i))
    }
}

/// Value written by one instruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub index: usize,
    pub dest: usize,
    pub value: f64,
}

fn run(program: &LgpProgram, layout: &RegisterLayout, inputs: &[f64], regs: &mut Vec<f64>, mut visit: impl FnMut(usize, &Instruction, f64)) {
    assert_eq!(inputs.len(), layout.num_inputs, "input count mismatch");
    regs.clear();
    regs.extend_from_slice(inputs);
    for j in 0..layout.num_supplementary {
        regs.push(match layout.init {
            RegisterInit::Inputs if !inputs.is_empty() => inputs[j % inputs.len()],
            _ => 1.0,
        });
    }
    for (i, ins) in program.instructions.iter().enumerate() {
        let v = ins.op.apply(regs[ins.a], regs[ins.b]);
        regs[ins.dest] = v;
        visit(i, ins, v);
    }
}

/// Executes the program on one case and records every write.
pub fn execute(program: &LgpProgram, layout: &RegisterLayout, inputs: &[f64]) -> Vec<Checkpoint> {
    let mut trace = Vec::with_capacity(program.len());
    let mut regs = Vec::new();
    run(program, layout, inputs, &mut regs, |index, ins, value| {
        trace.push(Checkpoint {
            index,
            dest: ins.dest,
            value,
        })
    });
    trace
}

fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

/// Multi-solution fitness: sum of absolute errors of every checkpoint, and
/// the lowest one with its instruction index (ties to the earliest).
pub fn fitness_ms(program: &LgpProgram, layout: &RegisterLayout, cases: &[Vec<f64>], targets: &[f64]) -> (f64, usize) {
    assert_eq!(cases.len(), targets.len());
    let mut errors = vec![0.0; program.len()];
    let mut regs = Vec::new();
    for (case, &w) in cases.iter().zip(targets) {
        run(program, layout, case, &mut regs, |i, _, v| errors[i] += (v - w).abs());
    }
    let mut best = (f64::INFINITY, 0);
    for (i, e) in errors.into_iter().enumerate() {
        let e = sanitize(e);
        if e < best.0 {
            best = (e, i);
        }
    }
    best
}

/// Single-solution fitness: error of the final value of `output`.
pub fn fitness_ss(
    program: &LgpProgram,
    layout: &RegisterLayout,
    cases: &[Vec<f64>],
    targets: &[f64],
    output: usize,
) -> f64 {
    assert_eq!(cases.len(), targets.len());
    let mut regs = Vec::new();
    let mut total = 0.0;
    for (case, &w) in cases.iter().zip(targets) {
        run(program, layout, case, &mut regs, |_, _, _| {});
        total += (regs[output] - w).abs();
    }
    sanitize(total)
}

pub fn random_program<R: Rng + ?Sized>(layout: &RegisterLayout, length: usize, rng: &mut R) -> LgpProgram {
    LgpProgram::new((0..length).map(|_| layout.random_instruction(rng)).collect())
}

/// Uniform crossover: each instruction slot is swapped between the parents
/// with probability 1/2.
pub fn lgp_crossover<R: Rng + ?Sized>(p1: &LgpProgram, p2: &LgpProgram, rng: &mut R) -> (LgpProgram, LgpProgram) {
    assert_eq!(p1.len(), p2.len(), "parents of different lengths");
    let (mut a, mut b) = (p1.clone(), p2.clone());
    for i in 0..a.len() {
        if rng.random_bool(0.5) {
            std::mem::swap(&mut a.instructions[i], &mut b.instructions[i]);
        }
    }
    (a, b)
}

/// Micro mutation: `count` times, one field of a random instruction is
/// redrawn.
pub fn lgp_mutate<R: Rng + ?Sized>(program: &mut LgpProgram, layout: &RegisterLayout, count: usize, rng: &mut R) {
    if program.is_empty() {
        return;
    }
    let n = layout.num_registers();
    for _ in 0..count {
        let i = rng.random_range(0..program.len());
        let ins = &mut program.instructions[i];
        match rng.random_range(0..4) {
            0 => ins.dest = rng.random_range(layout.first_writable()..n),
            1 => ins.op = layout.ops[rng.random_range(0..layout.ops.len())],
            2 => ins.a = rng.random_range(0..n),
            _ => ins.b = rng.random_range(0..n),
        }
    }
}

/// Fixed-length LGP operators for the steady-state engine.
#[derive(Debug, Clone)]
pub struct LgpOps {
    pub layout: RegisterLayout,
    pub length: usize,
    pub mutations: usize,
}

impl Variation for LgpOps {
    type Genome = LgpProgram;

    fn random(&self, rng: &mut SimRng) -> LgpProgram {
        random_program(&self.layout, self.length, rng)
    }

    fn crossover(&self, a: &LgpProgram, b: &LgpProgram, rng: &mut SimRng) -> (LgpProgram, LgpProgram) {
        lgp_crossover(a, b, rng)
    }

    fn mutate(&self, g: &mut LgpProgram, rng: &mut SimRng) {
        lgp_mutate(g, &self.layout, self.mutations, rng);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn ins(dest: usize, op: LgpOp, a: usize, b: usize) -> Instruction {
        Instruction { dest, op, a, b }
    }

    #[test]
    fn doubling_trace() {
        let layout = RegisterLayout::standard(1);
        let p = LgpProgram::new(vec![ins(4, LgpOp::Add, 0, 0)]);
        assert_eq!(
            execute(&p, &layout, &[3.0]),
            vec![Checkpoint {
                index: 0,
                dest: 4,
                value: 6.0
            }]
        );
    }

    #[test]
    fn trace_has_one_checkpoint_per_instruction() {
        let layout = RegisterLayout::standard(2);
        let p = random_program(&layout, 17, &mut seeded(3));
        assert_eq!(execute(&p, &layout, &[0.5, 0.25]).len(), 17);
    }

    #[test]
    fn checkpoint_survives_overwrite() {
        let layout = RegisterLayout::standard(1);
        // r1 = x*x, r2 = r1*r1 (x^4), r3 = x^4 + x, r3 = r3 * 0 afterwards
        let p = LgpProgram::new(vec![
            ins(1, LgpOp::Mul, 0, 0),
            ins(2, LgpOp::Mul, 1, 1),
            ins(3, LgpOp::Add, 2, 0),
            ins(3, LgpOp::Sub, 3, 3),
        ]);
        let xs: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 / 4.0]).collect();
        let ts: Vec<f64> = xs.iter().map(|x| x[0].powi(4) + x[0]).collect();
        assert_eq!(fitness_ms(&p, &layout, &xs, &ts), (0.0, 2));
        assert!(fitness_ss(&p, &layout, &xs, &ts, 3) > 0.0);
    }

    #[test]
    fn single_instruction_agrees() {
        let layout = RegisterLayout::standard(1);
        let p = LgpProgram::new(vec![ins(2, LgpOp::Add, 0, 1)]);
        let xs = vec![vec![1.0], vec![2.0]];
        let ts = vec![2.0, 3.0];
        assert_eq!(fitness_ms(&p, &layout, &xs, &ts).0, fitness_ss(&p, &layout, &xs, &ts, 2));
        assert_eq!(fitness_ss(&p, &layout, &xs, &ts, 2), 0.0);
    }

    #[test]
    fn wrong_output_register() {
        let layout = RegisterLayout::standard(2);
        let p = LgpProgram::new(vec![ins(5, LgpOp::Mul, 0, 1)]);
        let xs = vec![vec![2.0, 3.0]];
        assert_eq!(fitness_ss(&p, &layout, &xs, &[6.0], 5), 0.0);
        assert!(fitness_ss(&p, &layout, &xs, &[6.0], 4) > 0.0);
    }

    #[test]
    fn input_copies_fill_supplementary_registers() {
        let layout = RegisterLayout::standard(2).with_init(RegisterInit::Inputs);
        let p = LgpProgram::new(vec![ins(0, LgpOp::Add, 4, 5)]);
        assert_eq!(execute(&p, &layout, &[2.0, 3.0])[0].value, 5.0);
        let ones = RegisterLayout::standard(2);
        assert_eq!(execute(&p, &ones, &[2.0, 3.0])[0].value, 2.0);
    }

    #[test]
    fn guarded_division() {
        assert_eq!(LgpOp::Div.apply(3.0, 0.0), 3.0);
        assert_eq!(LgpOp::Div.apply(3.0, 2.0), 1.5);
    }

    #[test]
    fn identical_parents() {
        let layout = RegisterLayout::standard(1);
        let p = random_program(&layout, 12, &mut seeded(1));
        let (a, b) = lgp_crossover(&p, &p, &mut seeded(2));
        assert_eq!(a, p);
        assert_eq!(b, p);
    }

    #[test]
    fn offspring_slots_come_from_a_parent() {
        let layout = RegisterLayout::standard(1);
        let mut rng = seeded(5);
        let p1 = random_program(&layout, 30, &mut rng);
        let p2 = random_program(&layout, 30, &mut rng);
        let (a, b) = lgp_crossover(&p1, &p2, &mut rng);
        for i in 0..30 {
            let (x, y) = (a.instructions[i], b.instructions[i]);
            assert!(
                (x == p1.instructions[i] && y == p2.instructions[i])
                    || (x == p2.instructions[i] && y == p1.instructions[i])
            );
        }
    }

    #[test]
    fn mutation_preserves_validity() {
        let layout = RegisterLayout::standard(3);
        let mut rng = seeded(8);
        let mut p = random_program(&layout, 10, &mut rng);
        for _ in 0..500 {
            lgp_mutate(&mut p, &layout, 2, &mut rng);
            assert!(p.is_valid(&layout));
        }
    }
}
