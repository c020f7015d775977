//! Expression trees parsed from decoded IFGP symbols, and classification
//! fitness over every sub-expression.

use std::collections::HashSet;

use rand::Rng;

use super::{constant_value, BinOp, Symbol, SymbolTable, UnaryOp};
use super::data::Dataset;
use crate::primitives::DIVISION_EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Var(usize),
    Const(i32),
    Bin { op: BinOp, left: usize, right: usize },
    Unary { op: UnaryOp, arg: usize },
}

/// Nodes in post-order: children precede their parent and the subtree of
/// node `i` occupies `i + 1 - size[i] ..= i`. The root is the last node.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprTree {
    pub nodes: Vec<Node>,
    size: Vec<usize>,
}

struct Parser<'a> {
    symbols: &'a [Symbol],
    pos: usize,
    tree: ExprTree,
}

impl Parser<'_> {
    fn peek(&self) -> Option<Symbol> {
        self.symbols.get(self.pos).copied()
    }

    fn push(&mut self, node: Node, first: usize) -> usize {
        let i = self.tree.nodes.len();
        self.tree.nodes.push(node);
        self.tree.size.push(i + 1 - first);
        i
    }

    fn expr(&mut self, min_prec: u8) -> Option<usize> {
        let first = self.tree.nodes.len();
        let mut left = self.factor()?;
        while let Some(Symbol::Bin(op)) = self.peek() {
            if op.precedence() < min_prec {
                break;
            }
            self.pos += 1;
            let right = self.expr(op.precedence() + 1)?;
            left = self.push(Node::Bin { op, left, right }, first);
        }
        Some(left)
    }

    fn factor(&mut self) -> Option<usize> {
        let first = self.tree.nodes.len();
        let s = self.peek()?;
        self.pos += 1;
        match s {
            Symbol::Var(v) => Some(self.push(Node::Var(v), first)),
            Symbol::Const(e) => Some(self.push(Node::Const(e), first)),
            Symbol::Open => {
                let inner = self.expr(0)?;
                (self.peek() == Some(Symbol::Close)).then(|| self.pos += 1)?;
                Some(inner)
            }
            Symbol::Unary(op) => {
                let arg = self.expr(0)?;
                (self.peek() == Some(Symbol::Close)).then(|| self.pos += 1)?;
                Some(self.push(Node::Unary { op, arg }, first))
            }
            Symbol::Bin(_) | Symbol::Close => None,
        }
    }
}

impl ExprTree {
    /// Parses a balanced symbol sequence with the usual precedence and left
    /// associativity. Returns `None` on malformed input.
    pub fn parse(symbols: &[Symbol]) -> Option<Self> {
        let mut p = Parser {
            symbols,
            pos: 0,
            tree: ExprTree {
                nodes: Vec::new(),
                size: Vec::new(),
            },
        };
        p.expr(0)?;
        (p.pos == symbols.len()).then_some(p.tree)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Indices of the nodes in the subtree rooted at `i`.
    pub fn subtree(&self, i: usize) -> std::ops::RangeInclusive<usize> {
        i + 1 - self.size[i]..=i
    }

    /// Fully parenthesised text of the subtree rooted at `i`.
    pub fn render(&self, i: usize, table: &SymbolTable) -> String {
        match self.nodes[i] {
            Node::Var(v) => table.variables[v].clone(),
            Node::Const(e) => format!("{}", constant_value(e)),
            Node::Bin { op, left, right } => {
                format!("({}{}{})", self.render(left, table), op.symbol(), self.render(right, table))
            }
            Node::Unary { op, arg } => format!("{}({})", op.name(), self.render(arg, table)),
        }
    }

    /// Number of distinct sub-expressions (by text).
    pub fn distinct_subexpressions(&self, table: &SymbolTable) -> usize {
        (0..self.len()).map(|i| self.render(i, table)).collect::<HashSet<_>>().len()
    }

    /// Value of the subtree at `i`, or `None` if some node raises.
    pub fn eval(&self, i: usize, inputs: &[f64]) -> Option<f64> {
        let v = match self.nodes[i] {
            Node::Var(v) => inputs[v],
            Node::Const(e) => constant_value(e),
            Node::Bin { op, left, right } => apply_bin(op, self.eval(left, inputs)?, self.eval(right, inputs)?)?,
            Node::Unary { op, arg } => apply_unary(op, self.eval(arg, inputs)?)?,
        };
        v.is_finite().then_some(v)
    }
}

fn apply_bin(op: BinOp, a: f64, b: f64) -> Option<f64> {
    let v = match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b.abs() < DIVISION_EPSILON {
                return None;
            }
            a / b
        }
    };
    v.is_finite().then_some(v)
}

fn apply_unary(op: UnaryOp, a: f64) -> Option<f64> {
    let v = match op {
        UnaryOp::Sin => a.sin(),
        UnaryOp::Exp => a.exp(),
    };
    v.is_finite().then_some(v)
}

/// Class `0 .. num_classes` nearest to `v`; halfway values go to the lower
/// class.
pub fn nearest_class(v: f64, num_classes: usize) -> usize {
    let c = (v - 0.5).ceil();
    if c <= 0.0 || c.is_nan() {
        0
    } else {
        (c as usize).min(num_classes - 1)
    }
}

/// Minimum misclassification count over all sub-expressions and the node
/// attaining it (lowest index on ties).
///
/// A node whose evaluation raises on some row is replaced by a uniformly
/// drawn terminal; its former descendants stop being candidates.
pub fn fitness_classification<R: Rng + ?Sized>(
    tree: &mut ExprTree,
    table: &SymbolTable,
    data: &Dataset,
    rng: &mut R,
) -> (usize, usize) {
    assert_eq!(table.variables.len(), data.num_inputs(), "variable count mismatch");
    let rows = data.len();
    let n = tree.len();
    let mut values = vec![0.0; n * rows];
    let mut alive = vec![true; n];
    let column = |node: Node, values: &mut [f64]| match node {
        Node::Var(v) => {
            for (k, slot) in values.iter_mut().enumerate() {
                *slot = data.inputs[k][v];
            }
        }
        Node::Const(e) => values.fill(constant_value(e)),
        _ => unreachable!("only terminals are filled directly"),
    };
    for i in 0..n {
        let (done, rest) = values.split_at_mut(i * rows);
        let out = &mut rest[..rows];
        let raised = match tree.nodes[i] {
            Node::Var(_) | Node::Const(_) => {
                column(tree.nodes[i], out);
                false
            }
            Node::Bin { op, left, right } => (0..rows).any(|k| match apply_bin(op, done[left * rows + k], done[right * rows + k]) {
                Some(v) => {
                    out[k] = v;
                    false
                }
                None => true,
            }),
            Node::Unary { op, arg } => (0..rows).any(|k| match apply_unary(op, done[arg * rows + k]) {
                Some(v) => {
                    out[k] = v;
                    false
                }
                None => true,
            }),
        };
        if raised {
            for d in tree.subtree(i) {
                alive[d] = false;
            }
            alive[i] = true;
            tree.size[i] = 1;
            let t = table.terminal(rng.random_range(0..table.num_terminals()));
            tree.nodes[i] = match t {
                Symbol::Var(v) => Node::Var(v),
                Symbol::Const(e) => Node::Const(e),
                _ => unreachable!(),
            };
            column(tree.nodes[i], out);
        }
    }
    let mut best = (usize::MAX, 0);
    for i in (0..n).filter(|&i| alive[i]) {
        let col = &values[i * rows..(i + 1) * rows];
        let errors = col
            .iter()
            .zip(&data.classes)
            .filter(|(&v, &c)| nearest_class(v, data.num_classes) != c)
            .count();
        if errors < best.0 {
            best = (errors, i);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifgp::{decode_symbols, IfgpChromosome};
    use crate::rng::seeded;

    fn ab() -> SymbolTable {
        SymbolTable::new(
            vec!["a".into(), "b".into()],
            vec![],
            vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div],
            vec![],
        )
        .unwrap()
    }

    fn worked_tree() -> ExprTree {
        ExprTree::parse(&decode_symbols(&IfgpChromosome::new(vec![7, 3, 2, 0, 5, 2]), &ab())).unwrap()
    }

    #[test]
    fn worked_example_subexpressions() {
        let t = worked_tree();
        assert_eq!(t.len(), 5);
        assert_eq!(t.distinct_subexpressions(&ab()), 4);
        assert_eq!(t.render(t.root(), &ab()), "(b/(a+a))");
        assert_eq!(t.subtree(t.root()), 0..=4);
    }

    #[test]
    fn precedence_and_associativity() {
        use Symbol::*;
        let s = [Var(0), Bin(BinOp::Sub), Var(1), Bin(BinOp::Sub), Var(0), Bin(BinOp::Mul), Var(1)];
        let t = ExprTree::parse(&s).unwrap();
        assert_eq!(t.render(t.root(), &ab()), "((a-b)-(a*b))");
        assert_eq!(t.eval(t.root(), &[3.0, 2.0]), Some(-5.0));
    }

    #[test]
    fn malformed_input_is_rejected() {
        use Symbol::*;
        assert!(ExprTree::parse(&[Var(0), Bin(BinOp::Add)]).is_none());
        assert!(ExprTree::parse(&[Open, Var(0)]).is_none());
        assert!(ExprTree::parse(&[Var(0), Close]).is_none());
    }

    #[test]
    fn nearest_classes() {
        assert_eq!(nearest_class(0.3, 2), 0);
        assert_eq!(nearest_class(0.5, 2), 0);
        assert_eq!(nearest_class(0.51, 2), 1);
        assert_eq!(nearest_class(7.0, 3), 2);
        assert_eq!(nearest_class(-3.0, 3), 0);
    }

    #[test]
    fn label_input_is_perfect() {
        let table = SymbolTable::arithmetic(2);
        let data = Dataset::new(vec![vec![0.0, 0.7], vec![1.0, 0.2], vec![1.0, 0.9]], vec![0, 1, 1]).unwrap();
        let mut t = ExprTree::parse(&[Symbol::Var(1), Symbol::Bin(BinOp::Mul), Symbol::Var(0)]).unwrap();
        assert_eq!(fitness_classification(&mut t, &table, &data, &mut seeded(0)), (0, 1));
    }

    #[test]
    fn raising_division_is_replaced() {
        use Symbol::*;
        // a/(b-b)
        let s = [Var(0), Bin(BinOp::Div), Open, Var(1), Bin(BinOp::Sub), Var(1), Close];
        let mut t = ExprTree::parse(&s).unwrap();
        let data = Dataset::new(vec![vec![1.0, 2.0], vec![0.0, 1.0]], vec![1, 0]).unwrap();
        let table = ab();
        fitness_classification(&mut t, &table, &data, &mut seeded(3));
        assert!(matches!(t.nodes[t.root()], Node::Var(_)));
        for row in &data.inputs {
            assert!(t.eval(t.root(), row).is_some());
        }
        let b_minus_b = 3;
        assert!(matches!(t.nodes[b_minus_b], Node::Bin { .. }));
    }
}
