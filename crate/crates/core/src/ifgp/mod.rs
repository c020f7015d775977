//! Infix Form GP: integer strings decoded positionally into infix
//! expressions.
//!
//! Gene `C_i` selects symbol `possibilities[C_i mod |possibilities|]`, where
//! the admissible symbols depend on the previously decoded symbol and on the
//! number of open parentheses. The last gene is reserved for the correction
//! that turns a truncated expression into a complete one.

pub mod data;
pub mod tree;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{steady_state_observed, EngineConfig, RunResult, Variation};
use crate::error::{Error, Result};
use crate::mep::{crossover, CrossoverKind};
use crate::rng::{seeded, SimRng};

pub use data::{load_csv, load_proben1, parse_proben1, read_csv, threshold_dataset, Dataset, Proben1};
pub use tree::{fitness_classification, nearest_class, ExprTree, Node};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            other => return Err(Error::InvalidParameter(format!("unknown binary operator {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnaryOp {
    Sin,
    Exp,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Sin => "sin",
            UnaryOp::Exp => "exp",
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "sin" => UnaryOp::Sin,
            "exp" => UnaryOp::Exp,
            other => return Err(Error::InvalidParameter(format!("unknown unary function {other:?}"))),
        })
    }
}

/// One decoded symbol. A unary function symbol carries its own opening
/// parenthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Var(usize),
    /// The constant `2^e`.
    Const(i32),
    Bin(BinOp),
    Unary(UnaryOp),
    Open,
    Close,
}

/// `2^exponent`.
pub fn constant_value(exponent: i32) -> f64 {
    2f64.powi(exponent)
}

/// Variables, constants, operators and parentheses in a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolTable {
    pub variables: Vec<String>,
    /// Exponents of the power-of-two constants, ascending.
    pub exponents: Vec<i32>,
    pub binary: Vec<BinOp>,
    #[serde(default)]
    pub unary: Vec<UnaryOp>,
}

impl SymbolTable {
    pub fn new(variables: Vec<String>, mut exponents: Vec<i32>, binary: Vec<BinOp>, unary: Vec<UnaryOp>) -> Result<Self> {
        if variables.is_empty() && exponents.is_empty() {
            return Err(Error::InvalidParameter("IFGP needs at least one terminal".into()));
        }
        if binary.is_empty() {
            return Err(Error::InvalidParameter("IFGP needs at least one binary operator".into()));
        }
        exponents.sort_unstable();
        exponents.dedup();
        Ok(Self {
            variables,
            exponents,
            binary,
            unary,
        })
    }

    /// Variables `x1 .. xn` over `{+, -, *, /}` without constants.
    pub fn arithmetic(num_vars: usize) -> Self {
        let vars = (1..=num_vars).map(|i| format!("x{i}")).collect();
        Self::new(vars, Vec::new(), Self::four_ops(), Vec::new()).expect("valid table")
    }

    fn four_ops() -> Vec<BinOp> {
        vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div]
    }

    /// The classification preset: `{+, -, *, /, sin, exp}` over the inputs
    /// and the constants `2^-r .. 2^r` (`r = 20` gives 41 constants, `r =
    /// 40` gives 81, `None` gives none).
    pub fn classification(num_vars: usize, constant_range: Option<i32>) -> Self {
        let vars = (1..=num_vars).map(|i| format!("x{i}")).collect();
        let exps = constant_range.map_or_else(Vec::new, |r| (-r..=r).collect());
        Self::new(vars, exps, Self::four_ops(), vec![UnaryOp::Sin, UnaryOp::Exp]).expect("valid table")
    }

    pub fn num_terminals(&self) -> usize {
        self.variables.len() + self.exponents.len()
    }

    /// Size of the global symbol list, the range of gene values.
    pub fn num_symbols(&self) -> usize {
        self.num_terminals() + self.binary.len() + self.unary.len() + 2
    }

    pub fn terminal(&self, i: usize) -> Symbol {
        if i < self.variables.len() {
            Symbol::Var(i)
        } else {
            Symbol::Const(self.exponents[i - self.variables.len()])
        }
    }

    pub fn terminals(&self) -> impl Iterator<Item = Symbol> + '_ {
        (0..self.num_terminals()).map(|i| self.terminal(i))
    }

    /// Admissible symbols after the previous symbol, in decoding order.
    pub fn possibilities(&self, state: DecoderState) -> Vec<Symbol> {
        match state.prev {
            Prev::Start | Prev::Operator | Prev::Open => {
                let mut v: Vec<Symbol> = self.terminals().collect();
                v.push(Symbol::Open);
                v.extend(self.unary.iter().map(|&u| Symbol::Unary(u)));
                v
            }
            Prev::Operand => {
                let mut v: Vec<Symbol> = self.binary.iter().map(|&b| Symbol::Bin(b)).collect();
                if state.balance > 0 {
                    v.push(Symbol::Close);
                }
                v
            }
        }
    }

    pub fn render_symbol(&self, s: Symbol) -> String {
        match s {
            Symbol::Var(i) => self.variables[i].clone(),
            Symbol::Const(e) => format!("{}", constant_value(e)),
            Symbol::Bin(b) => b.symbol().to_string(),
            Symbol::Unary(u) => format!("{}(", u.name()),
            Symbol::Open => "(".into(),
            Symbol::Close => ")".into(),
        }
    }
}

/// Category of the previously decoded symbol. Variables, constants and
/// closing parentheses are operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prev {
    Start,
    Operand,
    Operator,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderState {
    pub prev: Prev,
    /// Open minus closed parentheses.
    pub balance: usize,
}

impl DecoderState {
    pub const START: DecoderState = DecoderState {
        prev: Prev::Start,
        balance: 0,
    };

    fn after(self, s: Symbol) -> Self {
        match s {
            Symbol::Var(_) | Symbol::Const(_) => DecoderState {
                prev: Prev::Operand,
                ..self
            },
            Symbol::Close => DecoderState {
                prev: Prev::Operand,
                balance: self.balance - 1,
            },
            Symbol::Bin(_) => DecoderState {
                prev: Prev::Operator,
                ..self
            },
            Symbol::Open | Symbol::Unary(_) => DecoderState {
                prev: Prev::Open,
                balance: self.balance + 1,
            },
        }
    }
}

/// Fixed-length integer string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IfgpChromosome {
    pub genes: Vec<u32>,
}

impl IfgpChromosome {
    pub fn new(genes: Vec<u32>) -> Self {
        Self { genes }
    }

    pub fn random<R: Rng + ?Sized>(table: &SymbolTable, length: usize, rng: &mut R) -> Self {
        let n = table.num_symbols() as u32;
        Self::new((0..length).map(|_| rng.random_range(0..n)).collect())
    }
}

/// Decodes the chromosome into a complete, balanced symbol sequence.
pub fn decode_symbols(chromosome: &IfgpChromosome, table: &SymbolTable) -> Vec<Symbol> {
    let genes = &chromosome.genes;
    assert!(genes.len() >= 2, "IFGP chromosomes need at least two genes");
    let mut out = Vec::with_capacity(genes.len() + 4);
    let mut state = DecoderState::START;
    for &g in &genes[..genes.len() - 1] {
        let options = table.possibilities(state);
        let s = options[g as usize % options.len()];
        out.push(s);
        state = state.after(s);
    }
    if state.prev != Prev::Operand {
        let last = genes[genes.len() - 1] as usize;
        let t = table.terminal(last % table.num_terminals());
        out.push(t);
        state = state.after(t);
    }
    for _ in 0..state.balance {
        out.push(Symbol::Close);
    }
    out
}

/// Infix text of the decoded expression.
pub fn decode(chromosome: &IfgpChromosome, table: &SymbolTable) -> String {
    decode_symbols(chromosome, table)
        .into_iter()
        .map(|s| table.render_symbol(s))
        .collect()
}

/// Two-point crossover and per-gene uniform mutation.
#[derive(Debug, Clone)]
pub struct IfgpOps {
    pub table: SymbolTable,
    pub length: usize,
    pub mutation: IfgpMutation,
}

/// How many genes are redrawn per offspring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IfgpMutation {
    /// Each gene independently with this probability.
    PerGene(f64),
    /// This many uniformly chosen genes.
    Count(usize),
}

pub fn ifgp_mutate<R: Rng + ?Sized>(chromosome: &mut IfgpChromosome, table: &SymbolTable, mutation: IfgpMutation, rng: &mut R) {
    let n = table.num_symbols() as u32;
    let len = chromosome.genes.len();
    match mutation {
        IfgpMutation::PerGene(p) => {
            for g in &mut chromosome.genes {
                if rng.random_bool(p) {
                    *g = rng.random_range(0..n);
                }
            }
        }
        IfgpMutation::Count(k) => {
            for _ in 0..k {
                let i = rng.random_range(0..len);
                chromosome.genes[i] = rng.random_range(0..n);
            }
        }
    }
}

impl Variation for IfgpOps {
    type Genome = IfgpChromosome;

    fn random(&self, rng: &mut SimRng) -> IfgpChromosome {
        IfgpChromosome::random(&self.table, self.length, rng)
    }

    fn crossover(&self, a: &IfgpChromosome, b: &IfgpChromosome, rng: &mut SimRng) -> (IfgpChromosome, IfgpChromosome) {
        let (x, y) = crossover(&a.genes, &b.genes, CrossoverKind::TwoPoint, rng);
        (IfgpChromosome::new(x), IfgpChromosome::new(y))
    }

    fn mutate(&self, g: &mut IfgpChromosome, rng: &mut SimRng) {
        ifgp_mutate(g, &self.table, self.mutation, rng);
    }
}

/// Decodes, parses and scores a chromosome; returns the misclassification
/// count of its best sub-expression.
pub fn ifgp_errors<R: Rng + ?Sized>(
    chromosome: &IfgpChromosome,
    table: &SymbolTable,
    data: &Dataset,
    rng: &mut R,
) -> usize {
    let mut tree = ExprTree::parse(&decode_symbols(chromosome, table)).expect("decoded expressions always parse");
    fitness_classification(&mut tree, table, data, rng).0
}

/// The individual with the lowest validation error seen during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationBest {
    pub generation: usize,
    pub errors: usize,
    pub chromosome: IfgpChromosome,
}

#[derive(Debug, Clone)]
pub struct IfgpRun {
    pub result: RunResult<IfgpChromosome>,
    pub validation: Option<ValidationBest>,
}

/// Evolves a classifier on `train`; when a validation set is given, the
/// best training individual of every generation is scored on it and the
/// lowest-error one is kept.
pub fn run_ifgp_classification(
    ops: &IfgpOps,
    config: &EngineConfig,
    train: &Dataset,
    validation: Option<&Dataset>,
    rng: &mut SimRng,
) -> Result<IfgpRun> {
    config.validate()?;
    if ops.length < 2 {
        return Err(Error::InvalidParameter("IFGP chromosomes need at least two genes".into()));
    }
    if ops.table.variables.len() != train.num_inputs() {
        return Err(Error::InvalidParameter(format!(
            "{} variables for {} inputs",
            ops.table.variables.len(),
            train.num_inputs()
        )));
    }
    let mut vrng = seeded(rng.random());
    let mut best: Option<ValidationBest> = None;
    let result = steady_state_observed(
        ops,
        config,
        |c, r| ifgp_errors(c, &ops.table, train, r) as f64,
        rng,
        |g| {
            if let Some(v) = validation {
                let c = &g.genomes[g.best_index()];
                let errors = ifgp_errors(c, &ops.table, v, &mut vrng);
                if best.as_ref().is_none_or(|b| errors < b.errors) {
                    best = Some(ValidationBest {
                        generation: g.index,
                        errors,
                        chromosome: c.clone(),
                    });
                }
            }
        },
    );
    Ok(IfgpRun {
        result,
        validation: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn ab() -> SymbolTable {
        SymbolTable::new(vec!["a".into(), "b".into()], vec![], SymbolTable::four_ops(), vec![]).unwrap()
    }

    #[test]
    fn possibility_counts() {
        let t = ab();
        assert_eq!(t.possibilities(DecoderState::START), vec![Symbol::Var(0), Symbol::Var(1), Symbol::Open]);
        let operand = DecoderState {
            prev: Prev::Operand,
            balance: 0,
        };
        assert_eq!(t.possibilities(operand).len(), 4);
        assert_eq!(t.possibilities(DecoderState { balance: 1, ..operand }).len(), 5);
    }

    #[test]
    fn worked_decoding() {
        let c = IfgpChromosome::new(vec![7, 3, 2, 0, 5, 2]);
        assert_eq!(decode(&c, &ab()), "b/(a+a)");
    }

    #[test]
    fn two_gene_decoding() {
        assert_eq!(decode(&IfgpChromosome::new(vec![0, 0]), &ab()), "a");
    }

    #[test]
    fn constants() {
        assert_eq!(constant_value(17), 131072.0);
        assert_eq!(constant_value(-4), 0.0625);
        assert_eq!(constant_value(0), 1.0);
        let t = SymbolTable::classification(1, Some(20));
        assert_eq!(t.exponents.len(), 41);
        assert_eq!(t.render_symbol(Symbol::Const(-4)), "0.0625");
    }

    #[test]
    fn unary_tokens_open_a_parenthesis() {
        let t = SymbolTable::classification(1, None);
        // start: [x1, (, sin(, exp(]; 2 -> sin(
        let c = IfgpChromosome::new(vec![2, 0, 0]);
        assert_eq!(decode(&c, &t), "sin(x1)");
    }

    #[test]
    fn mutation_stays_in_range() {
        let t = ab();
        let mut rng = seeded(4);
        let mut c = IfgpChromosome::random(&t, 20, &mut rng);
        for _ in 0..200 {
            ifgp_mutate(&mut c, &t, IfgpMutation::PerGene(0.3), &mut rng);
            assert!(c.genes.iter().all(|&g| (g as usize) < t.num_symbols()));
        }
    }

    #[test]
    fn threshold_runs_reach_zero_error() {
        let mut rng = seeded(77);
        let data = threshold_dataset(50, &mut rng);
        let ops = IfgpOps {
            table: SymbolTable::arithmetic(2),
            length: 10,
            mutation: IfgpMutation::Count(2),
        };
        let config = EngineConfig {
            population_size: 20,
            generations: 10,
            crossover: CrossoverKind::TwoPoint,
            crossover_probability: 0.9,
            mutation: crate::mep::MutationSpec::Symbols(2),
            tournament_size: 2,
            elitism: 0,
            success_threshold: Some(0.5),
            stop_on_success: false,
            seed: 0,
        };
        let run = run_ifgp_classification(&ops, &config, &data, Some(&data), &mut rng).unwrap();
        assert_eq!(run.result.best_fitness, 0.0);
        assert_eq!(run.validation.unwrap().errors, 0);
    }

    #[test]
    fn identical_parents() {
        let ops = IfgpOps {
            table: ab(),
            length: 10,
            mutation: IfgpMutation::Count(2),
        };
        let mut rng = seeded(1);
        let p = ops.random(&mut rng);
        let (x, y) = ops.crossover(&p, &p, &mut rng);
        assert_eq!((x, y), (p.clone(), p));
    }
}
