//! Multi Expression Programming chromosomes.
//!
//! A chromosome is a fixed-length list of genes. A gene is either a terminal
//! or a function whose arguments point to genes at lower positions, so every
//! gene encodes an expression and the chromosome as a whole encodes `NG`
//! candidate solutions that are evaluated in a single forward pass.

mod eval;
mod ops;
mod render;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::primitives::Signature;

pub use eval::{
    best_gene, evaluate_all, fitness_regression, handle_exception, EvalMatrix, FitnessCases,
};
pub use ops::{
    crossover, crossover_one_point_at, crossover_two_point_at, mutate, CrossoverKind, MepOps,
    MutationSpec,
};
pub use render::{active_genes, decode_expression, expression_ids, CompiledExpr, ExprFault};

/// Largest supported function arity.
pub const MAX_ARITY: usize = 3;

/// Probability that a randomly drawn gene after the first one is a function.
pub const DEFAULT_P_FUNC: f64 = 0.5;

/// Argument pointers of a function gene, stored inline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Args {
    len: u8,
    idx: [u32; MAX_ARITY],
}

impl Args {
    pub fn new(args: &[usize]) -> Self {
        assert!(args.len() <= MAX_ARITY, "arity above {MAX_ARITY}");
        let mut idx = [0u32; MAX_ARITY];
        for (slot, &a) in idx.iter_mut().zip(args) {
            *slot = a as u32;
        }
        Self {
            len: args.len() as u8,
            idx,
        }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> usize {
        debug_assert!(i < self.len());
        self.idx[i] as usize
    }

    pub fn set(&mut self, i: usize, value: usize) {
        debug_assert!(i < self.len());
        self.idx[i] = value as u32;
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.idx[..self.len()].iter().map(|&a| a as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gene {
    Terminal(usize),
    Function { op: usize, args: Args },
}

impl Gene {
    pub fn function(op: usize, args: &[usize]) -> Self {
        Gene::Function {
            op,
            args: Args::new(args),
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Gene::Terminal(_))
    }

    /// Number of mutable symbols carried by the gene: its kind plus one per
    /// argument pointer.
    pub fn symbol_count(&self) -> usize {
        match self {
            Gene::Terminal(_) => 1,
            Gene::Function { args, .. } => 1 + args.len(),
        }
    }

    pub fn is_valid_at(&self, position: usize, sig: &Signature) -> bool {
        match *self {
            Gene::Terminal(t) => t < sig.num_terminals,
            Gene::Function { op, args } => {
                position > 0
                    && op < sig.num_functions()
                    && args.len() == sig.arities[op]
                    && args.iter().all(|a| a < position)
            }
        }
    }
}

/// Placement of terminal genes in a chromosome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Any gene may hold any symbol (gene 0 is always a terminal).
    #[default]
    Free,
    /// The first `num_terminals` genes hold the terminals in order and are
    /// never changed; every later gene is a function.
    TerminalsFirst,
}

impl Layout {
    /// Index of the first gene the variation operators may change.
    pub fn first_mutable(self, sig: &Signature, length: usize) -> usize {
        match self {
            Layout::Free => 0,
            Layout::TerminalsFirst if sig.num_functions() == 0 => length,
            Layout::TerminalsFirst => sig.num_terminals.min(length),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Chromosome {
    pub genes: Vec<Gene>,
}

impl Chromosome {
    pub fn new(genes: Vec<Gene>) -> Self {
        Self { genes }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// Checks every structural invariant against a signature.
    pub fn is_valid(&self, sig: &Signature) -> bool {
        !self.genes.is_empty()
            && self.genes[0].is_terminal()
            && self
                .genes
                .iter()
                .enumerate()
                .all(|(i, g)| g.is_valid_at(i, sig))
    }

    /// Total number of symbols (kinds plus argument pointers).
    pub fn symbol_count(&self) -> usize {
        self.genes.iter().map(Gene::symbol_count).sum()
    }
}

/// Maximum number of symbols of a chromosome with `num_genes` genes when the
/// widest function has arity `n`.
pub fn max_symbols(n: usize, num_genes: usize) -> usize {
    (n + 1) * (num_genes - 1) + 1
}

pub(crate) fn random_terminal<R: Rng + ?Sized>(sig: &Signature, rng: &mut R) -> Gene {
    Gene::Terminal(rng.random_range(0..sig.num_terminals))
}

pub(crate) fn random_function<R: Rng + ?Sized>(
    sig: &Signature,
    position: usize,
    rng: &mut R,
) -> Gene {
    let op = rng.random_range(0..sig.num_functions());
    let mut args = Args::new(&vec![0; sig.arities[op]]);
    for i in 0..args.len() {
        args.set(i, rng.random_range(0..position));
    }
    Gene::Function { op, args }
}

/// Draws a random gene valid at `position`.
pub(crate) fn random_gene<R: Rng + ?Sized>(
    sig: &Signature,
    position: usize,
    p_func: f64,
    rng: &mut R,
) -> Gene {
    if position > 0 && sig.num_functions() > 0 && rng.random_bool(p_func) {
        random_function(sig, position, rng)
    } else {
        random_terminal(sig, rng)
    }
}

/// A random structurally valid chromosome.
pub fn random_chromosome<R: Rng + ?Sized>(
    sig: &Signature,
    length: usize,
    layout: Layout,
    p_func: f64,
    rng: &mut R,
) -> Chromosome {
    assert!(length >= 1, "chromosome length must be positive");
    let fixed = layout.first_mutable(sig, length);
    let genes = (0..length)
        .map(|i| match layout {
            Layout::TerminalsFirst if i < fixed => Gene::Terminal(i),
            Layout::TerminalsFirst if fixed < length => random_function(sig, i, rng),
            Layout::TerminalsFirst => Gene::Terminal(i % sig.num_terminals),
            Layout::Free => random_gene(sig, i, p_func, rng),
        })
        .collect();
    Chromosome { genes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn sig() -> Signature {
        Signature::new(4, vec![2, 2, 2, 2])
    }

    #[test]
    fn max_symbols_formula() {
        assert_eq!(max_symbols(2, 7), 19);
        assert_eq!(max_symbols(2, 20), 58);
        assert_eq!(max_symbols(1, 1), 1);
    }

    #[test]
    fn random_without_functions_is_all_terminals() {
        let sig = Signature::new(1, vec![]);
        let c = random_chromosome(&sig, 3, Layout::Free, DEFAULT_P_FUNC, &mut seeded(1));
        assert_eq!(c.genes, vec![Gene::Terminal(0); 3]);
    }

    #[test]
    fn random_is_deterministic_and_valid() {
        let a = random_chromosome(&sig(), 20, Layout::Free, 0.5, &mut seeded(42));
        let b = random_chromosome(&sig(), 20, Layout::Free, 0.5, &mut seeded(42));
        assert_eq!(a, b);
        assert!(a.is_valid(&sig()));
    }

    #[test]
    fn terminals_first_layout() {
        let c = random_chromosome(&sig(), 10, Layout::TerminalsFirst, 0.5, &mut seeded(3));
        for i in 0..4 {
            assert_eq!(c.genes[i], Gene::Terminal(i));
        }
        assert!(c.genes[4..].iter().all(|g| !g.is_terminal()));
        assert!(c.is_valid(&sig()));
    }

    #[test]
    fn invalid_forward_pointer_detected() {
        let c = Chromosome::new(vec![Gene::Terminal(0), Gene::function(0, &[0, 1])]);
        assert!(!c.is_valid(&sig()));
    }

    #[test]
    fn symbol_count_matches_formula_bound() {
        let c = random_chromosome(&sig(), 12, Layout::Free, 1.0, &mut seeded(5));
        assert_eq!(c.symbol_count(), max_symbols(2, 12));
    }
}
