use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{random_chromosome, random_function, random_gene, Chromosome, Gene, Layout};
use crate::engine::Variation;
use crate::primitives::Signature;
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossoverKind {
    OnePoint,
    TwoPoint,
    Uniform,
}

/// How many symbols an offspring mutation touches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationSpec {
    /// Exactly this many uniformly chosen symbols per chromosome.
    Symbols(usize),
    /// Each gene independently with this probability.
    PerGene(f64),
}

/// One-point recombination exchanging everything after position `cut`.
pub fn crossover_one_point_at<T: Clone>(p1: &[T], p2: &[T], cut: usize) -> (Vec<T>, Vec<T>) {
    assert_eq!(p1.len(), p2.len());
    let mut o1 = p1[..cut].to_vec();
    o1.extend_from_slice(&p2[cut..]);
    let mut o2 = p2[..cut].to_vec();
    o2.extend_from_slice(&p1[cut..]);
    (o1, o2)
}

/// Two-point recombination exchanging positions `c1..c2`.
pub fn crossover_two_point_at<T: Clone>(
    p1: &[T],
    p2: &[T],
    c1: usize,
    c2: usize,
) -> (Vec<T>, Vec<T>) {
    assert_eq!(p1.len(), p2.len());
    assert!(c1 <= c2 && c2 <= p1.len());
    let mut o1 = p1.to_vec();
    let mut o2 = p2.to_vec();
    o1[c1..c2].clone_from_slice(&p2[c1..c2]);
    o2[c1..c2].clone_from_slice(&p1[c1..c2]);
    (o1, o2)
}

/// Recombines two equal-length gene strings.
pub fn crossover<T: Clone, R: Rng + ?Sized>(
    p1: &[T],
    p2: &[T],
    kind: CrossoverKind,
    rng: &mut R,
) -> (Vec<T>, Vec<T>) {
    assert_eq!(p1.len(), p2.len(), "parents must have equal length");
    let len = p1.len();
    match kind {
        CrossoverKind::OnePoint => {
            let cut = if len > 1 { rng.random_range(1..len) } else { 0 };
            crossover_one_point_at(p1, p2, cut)
        }
        CrossoverKind::TwoPoint => {
            let mut a = rng.random_range(0..=len);
            let mut b = rng.random_range(0..=len);
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            crossover_two_point_at(p1, p2, a, b)
        }
        CrossoverKind::Uniform => {
            let mut o1 = Vec::with_capacity(len);
            let mut o2 = Vec::with_capacity(len);
            for (x, y) in p1.iter().zip(p2) {
                if rng.random_bool(0.5) {
                    o1.push(x.clone());
                    o2.push(y.clone());
                } else {
                    o1.push(y.clone());
                    o2.push(x.clone());
                }
            }
            (o1, o2)
        }
    }
}

/// Changes symbol `symbol` of the gene at `position`; symbol 0 is the gene
/// kind and symbol `j > 0` is argument pointer `j - 1`.
fn mutate_symbol<R: Rng + ?Sized>(
    gene: &mut Gene,
    position: usize,
    symbol: usize,
    sig: &Signature,
    layout: Layout,
    p_func: f64,
    rng: &mut R,
) {
    if symbol == 0 {
        *gene = match (layout, *gene) {
            (Layout::TerminalsFirst, Gene::Function { op, args }) => {
                let mut fresh = random_function(sig, position, rng);
                if let Gene::Function { op: new_op, args: new_args } = &mut fresh {
                    if *new_op != op {
                        for j in 0..new_args.len().min(args.len()) {
                            new_args.set(j, args.get(j));
                        }
                    }
                }
                fresh
            }
            _ => random_gene(sig, position, p_func, rng),
        };
    } else if let Gene::Function { args, .. } = gene {
        args.set(symbol - 1, rng.random_range(0..position));
    }
}

/// Mutates a chromosome in place.
pub fn mutate<R: Rng + ?Sized>(
    chromosome: &mut Chromosome,
    sig: &Signature,
    layout: Layout,
    spec: MutationSpec,
    p_func: f64,
    rng: &mut R,
) {
    let len = chromosome.len();
    let start = layout.first_mutable(sig, len);
    if start >= len {
        return;
    }
    match spec {
        MutationSpec::Symbols(count) => {
            for _ in 0..count {
                let total: usize = chromosome.genes[start..]
                    .iter()
                    .map(Gene::symbol_count)
                    .sum();
                let mut pick = rng.random_range(0..total);
                for i in start..len {
                    let n = chromosome.genes[i].symbol_count();
                    if pick < n {
                        let gene = &mut chromosome.genes[i];
                        mutate_symbol(gene, i, pick, sig, layout, p_func, rng);
                        break;
                    }
                    pick -= n;
                }
            }
        }
        MutationSpec::PerGene(p) => {
            for i in start..len {
                if rng.random_bool(p) {
                    let symbol = rng.random_range(0..chromosome.genes[i].symbol_count());
                    let gene = &mut chromosome.genes[i];
                    mutate_symbol(gene, i, symbol, sig, layout, p_func, rng);
                }
            }
        }
    }
}

/// MEP variation operators bound to a signature and chromosome shape.
#[derive(Debug, Clone)]
pub struct MepOps {
    pub signature: Signature,
    pub length: usize,
    pub layout: Layout,
    pub p_func: f64,
    pub crossover: CrossoverKind,
    pub mutation: MutationSpec,
}

impl MepOps {
    pub fn new(
        signature: Signature,
        length: usize,
        crossover: CrossoverKind,
        mutation: MutationSpec,
    ) -> Self {
        Self {
            signature,
            length,
            layout: Layout::Free,
            p_func: super::DEFAULT_P_FUNC,
            crossover,
            mutation,
        }
    }

    pub fn with_layout(mut self, layout: Layout) -> Self {
        self.layout = layout;
        self
    }
}

impl Variation for MepOps {
    type Genome = Chromosome;

    fn random(&self, rng: &mut SimRng) -> Chromosome {
        random_chromosome(&self.signature, self.length, self.layout, self.p_func, rng)
    }

    fn crossover(&self, a: &Chromosome, b: &Chromosome, rng: &mut SimRng) -> (Chromosome, Chromosome) {
        let (o1, o2) = crossover(&a.genes, &b.genes, self.crossover, rng);
        (Chromosome::new(o1), Chromosome::new(o2))
    }

    fn mutate(&self, g: &mut Chromosome, rng: &mut SimRng) {
        mutate(g, &self.signature, self.layout, self.mutation, self.p_func, rng);
    }
}
