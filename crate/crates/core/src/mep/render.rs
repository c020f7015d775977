use std::collections::HashMap;

use super::{Chromosome, Gene, MAX_ARITY};
use crate::primitives::{Notation, PrimitiveSet, Value};

/// Fully parenthesised infix text of the expression encoded by a gene.
///
/// The text grows with the unfolded expression tree, which can be
/// exponential in the number of genes for heavily shared sub-expressions.
pub fn decode_expression<V: Value>(chromosome: &Chromosome, set: &PrimitiveSet<V>, gene: usize) -> String {
    let mut memo: Vec<Option<String>> = vec![None; gene + 1];
    render(chromosome, set, gene, &mut memo)
}

fn render<V: Value>(
    chromosome: &Chromosome,
    set: &PrimitiveSet<V>,
    i: usize,
    memo: &mut Vec<Option<String>>,
) -> String {
    if let Some(s) = &memo[i] {
        return s.clone();
    }
    let text = match chromosome.genes[i] {
        Gene::Terminal(t) => set.terminals()[t].clone(),
        Gene::Function { op, args } => {
            let function = &set.functions()[op];
            let parts: Vec<String> = args.iter().map(|a| render(chromosome, set, a, memo)).collect();
            match &function.notation {
                Notation::Infix(symbol) if parts.len() == 2 => {
                    format!("({}{}{})", parts[0], symbol, parts[1])
                }
                _ => format!("{}({})", function.name, parts.join(",")),
            }
        }
    };
    memo[i] = Some(text.clone());
    text
}

/// Positions of all genes the expression of `gene` depends on, ascending,
/// including `gene` itself.
pub fn active_genes(chromosome: &Chromosome, gene: usize) -> Vec<usize> {
    let mut used = vec![false; gene + 1];
    used[gene] = true;
    for i in (0..=gene).rev() {
        if !used[i] {
            continue;
        }
        if let Gene::Function { args, .. } = chromosome.genes[i] {
            for a in args.iter() {
                used[a] = true;
            }
        }
    }
    used.iter()
        .enumerate()
        .filter_map(|(i, &u)| u.then_some(i))
        .collect()
}

/// Assigns equal ids to genes that encode structurally identical
/// expressions, by hash-consing gene kinds over argument ids.
pub fn expression_ids(chromosome: &Chromosome) -> Vec<usize> {
    let mut table: HashMap<(bool, usize, [usize; MAX_ARITY], usize), usize> = HashMap::new();
    let mut ids = Vec::with_capacity(chromosome.len());
    for gene in &chromosome.genes {
        let key = match *gene {
            Gene::Terminal(t) => (true, t, [0; MAX_ARITY], 0),
            Gene::Function { op, args } => {
                let mut k = [0; MAX_ARITY];
                for (j, a) in args.iter().enumerate() {
                    k[j] = ids[a];
                }
                (false, op, k, args.len())
            }
        };
        let next = table.len();
        ids.push(*table.entry(key).or_insert(next));
    }
    ids
}

/// A fault raised while evaluating a compiled expression: the chromosome
/// position of the function gene that raised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExprFault {
    pub gene: usize,
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Terminal(usize),
    Function {
        op: usize,
        args: [usize; MAX_ARITY],
        arity: usize,
    },
}

/// The straight-line program computing a single gene, for problems whose
/// fitness cases are generated on the fly rather than tabulated up front.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    steps: Vec<Step>,
    positions: Vec<usize>,
}

impl CompiledExpr {
    pub fn new(chromosome: &Chromosome, gene: usize) -> Self {
        let positions = active_genes(chromosome, gene);
        let mut slot = vec![usize::MAX; gene + 1];
        for (s, &p) in positions.iter().enumerate() {
            slot[p] = s;
        }
        let steps = positions
            .iter()
            .map(|&p| match chromosome.genes[p] {
                Gene::Terminal(t) => Step::Terminal(t),
                Gene::Function { op, args } => {
                    let mut a = [0; MAX_ARITY];
                    for (j, g) in args.iter().enumerate() {
                        a[j] = slot[g];
                    }
                    Step::Function {
                        op,
                        args: a,
                        arity: args.len(),
                    }
                }
            })
            .collect();
        Self { steps, positions }
    }

    /// Number of genes in the expression's dependency closure.
    pub fn size(&self) -> usize {
        self.steps.len()
    }

    /// Evaluates the expression given one value per terminal. `scratch` is
    /// reused across calls to avoid allocation.
    pub fn eval<V: Value>(
        &self,
        set: &PrimitiveSet<V>,
        terminals: &[V],
        scratch: &mut Vec<V>,
    ) -> Result<V, ExprFault> {
        scratch.clear();
        let mut buf = [terminals[0]; MAX_ARITY];
        for (s, step) in self.steps.iter().enumerate() {
            let v = match *step {
                Step::Terminal(t) => terminals[t],
                Step::Function { op, args, arity } => {
                    for j in 0..arity {
                        buf[j] = scratch[args[j]];
                    }
                    match set.functions()[op].apply(&buf[..arity]) {
                        Some(v) if v.is_valid() => v,
                        _ => {
                            return Err(ExprFault {
                                gene: self.positions[s],
                            })
                        }
                    }
                }
            };
            scratch.push(v);
        }
        Ok(*scratch.last().expect("expression has at least one step"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::real;

    fn abcd() -> PrimitiveSet<f64> {
        PrimitiveSet::new(
            ["a", "b", "c", "d"].map(String::from).to_vec(),
            real::arithmetic(),
        )
        .unwrap()
    }

    fn example() -> Chromosome {
        Chromosome::new(vec![
            Gene::Terminal(0),
            Gene::Terminal(1),
            Gene::function(0, &[0, 1]),
            Gene::Terminal(2),
            Gene::Terminal(3),
            Gene::function(0, &[3, 4]),
            Gene::function(2, &[2, 5]),
        ])
    }

    #[test]
    fn renders_example() {
        let set = abcd();
        assert_eq!(decode_expression(&example(), &set, 6), "((a+b)*(c+d))");
        assert_eq!(decode_expression(&example(), &set, 0), "a");
        assert_eq!(decode_expression(&example(), &set, 5), "(c+d)");
    }

    #[test]
    fn prefix_rendering() {
        let set = PrimitiveSet::new(vec!["x".into()], vec![real::sin(), real::max()]).unwrap();
        let c = Chromosome::new(vec![
            Gene::Terminal(0),
            Gene::function(0, &[0]),
            Gene::function(1, &[1, 0]),
        ]);
        assert_eq!(decode_expression(&c, &set, 2), "max(sin(x),x)");
    }

    #[test]
    fn active_closure() {
        assert_eq!(active_genes(&example(), 5), vec![3, 4, 5]);
        assert_eq!(active_genes(&example(), 6), vec![0, 1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn compiled_matches_matrix() {
        let set = abcd();
        let c = example();
        let e = CompiledExpr::new(&c, 6);
        let mut scratch = Vec::new();
        assert_eq!(e.eval(&set, &[1.0, 2.0, 3.0, 4.0], &mut scratch), Ok(21.0));
        assert_eq!(e.size(), 7);
    }

    #[test]
    fn compiled_reports_fault_position() {
        let set = abcd();
        let c = Chromosome::new(vec![
            Gene::Terminal(0),
            Gene::Terminal(1),
            Gene::function(3, &[0, 1]),
            Gene::function(0, &[2, 2]),
        ]);
        let e = CompiledExpr::new(&c, 3);
        let mut scratch = Vec::new();
        assert_eq!(
            e.eval(&set, &[1.0, 0.0, 0.0, 0.0], &mut scratch),
            Err(ExprFault { gene: 2 })
        );
    }

    #[test]
    fn identical_expressions_share_ids() {
        let c = Chromosome::new(vec![
            Gene::Terminal(0),
            Gene::Terminal(0),
            Gene::function(0, &[0, 1]),
            Gene::function(0, &[1, 0]),
            Gene::function(0, &[0, 0]),
            Gene::function(1, &[0, 0]),
        ]);
        let ids = expression_ids(&c);
        assert_eq!(ids[0], ids[1]);
        assert_eq!(ids[2], ids[3]);
        assert_eq!(ids[2], ids[4]);
        assert_ne!(ids[4], ids[5]);
    }
}
