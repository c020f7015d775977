use rand::Rng;

use super::{random_terminal, Chromosome, Gene, MAX_ARITY};
use crate::primitives::{PrimitiveSet, Signature, Value};

/// Terminal values for every fitness case, stored column-wise:
/// `columns[terminal][case]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessCases<V> {
    num_cases: usize,
    columns: Vec<Vec<V>>,
}

impl<V: Value> FitnessCases<V> {
    /// Builds the table from one row of terminal values per case.
    pub fn from_rows(rows: &[Vec<V>]) -> Self {
        let num_terminals = rows.first().map_or(0, Vec::len);
        let columns = (0..num_terminals)
            .map(|t| {
                rows.iter()
                    .map(|r| {
                        assert_eq!(r.len(), num_terminals, "ragged fitness cases");
                        r[t]
                    })
                    .collect()
            })
            .collect();
        Self {
            num_cases: rows.len(),
            columns,
        }
    }

    pub fn from_columns(columns: Vec<Vec<V>>) -> Self {
        let num_cases = columns.first().map_or(0, Vec::len);
        assert!(
            columns.iter().all(|c| c.len() == num_cases),
            "ragged fitness cases"
        );
        Self { num_cases, columns }
    }

    pub fn num_cases(&self) -> usize {
        self.num_cases
    }

    pub fn num_terminals(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, terminal: usize) -> &[V] {
        &self.columns[terminal]
    }

    pub fn row(&self, case: usize) -> Vec<V> {
        self.columns.iter().map(|c| c[case]).collect()
    }
}

/// Values `o[i][k]` of every gene `i` on every case `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalMatrix<V> {
    num_genes: usize,
    num_cases: usize,
    values: Vec<V>,
    raised: Vec<bool>,
    touches: usize,
}

impl<V: Value> EvalMatrix<V> {
    pub fn num_genes(&self) -> usize {
        self.num_genes
    }

    pub fn num_cases(&self) -> usize {
        self.num_cases
    }

    /// All case values of gene `i`.
    pub fn gene(&self, i: usize) -> &[V] {
        &self.values[i * self.num_cases..(i + 1) * self.num_cases]
    }

    pub fn value(&self, gene: usize, case: usize) -> V {
        self.values[gene * self.num_cases + case]
    }

    /// Whether the original gene raised an exception on that case, which
    /// caused it to be repaired.
    pub fn raised(&self, gene: usize, case: usize) -> bool {
        self.raised[gene * self.num_cases + case]
    }

    /// Number of gene-case evaluations performed, including re-evaluations
    /// after repairs.
    pub fn touches(&self) -> usize {
        self.touches
    }
}

/// Replaces a gene that raised an exception with a uniformly drawn terminal.
pub fn handle_exception<R: Rng + ?Sized>(gene: &Gene, sig: &Signature, rng: &mut R) -> Gene {
    debug_assert!(!gene.is_terminal(), "terminals never raise");
    random_terminal(sig, rng)
}

/// Evaluates every gene of the chromosome on every case in one forward pass.
///
/// A function gene that raises on some case is repaired in place by
/// [`handle_exception`] and then re-evaluated, so the returned matrix only
/// holds valid values.
pub fn evaluate_all<V: Value, R: Rng + ?Sized>(
    chromosome: &mut Chromosome,
    set: &PrimitiveSet<V>,
    cases: &FitnessCases<V>,
    rng: &mut R,
) -> EvalMatrix<V> {
    let num_genes = chromosome.len();
    let n = cases.num_cases();
    let mut values: Vec<V> = Vec::with_capacity(num_genes * n);
    let mut raised = vec![false; num_genes * n];
    let mut touches = 0;

    for i in 0..num_genes {
        let gene = chromosome.genes[i];
        match gene {
            Gene::Terminal(t) => {
                values.extend_from_slice(cases.column(t));
                touches += n;
            }
            Gene::Function { op, args: ptrs } => {
                let function = &set.functions()[op];
                let (done, rest) = values.split_at_mut(i * n);
                let _ = rest;
                let mut columns: [&[V]; MAX_ARITY] = [&[]; MAX_ARITY];
                for (j, a) in ptrs.iter().enumerate() {
                    columns[j] = &done[a * n..(a + 1) * n];
                }
                let mut row = Vec::with_capacity(n);
                let outcome = function.apply_columns(&columns[..ptrs.len()], &mut row);
                match outcome {
                    Ok(()) => {
                        touches += n;
                        values.extend_from_slice(&row);
                    }
                    Err(k) => {
                        touches += k + 1;
                        raised[i * n + k] = true;
                        let repaired = handle_exception(&gene, set.signature(), rng);
                        chromosome.genes[i] = repaired;
                        let Gene::Terminal(t) = repaired else {
                            unreachable!()
                        };
                        values.extend_from_slice(cases.column(t));
                        touches += n;
                    }
                }
            }
        }
    }

    EvalMatrix {
        num_genes,
        num_cases: n,
        values,
        raised,
        touches,
    }
}

/// The lowest fitness in a per-gene sequence and its index; ties go to the
/// lowest index.
pub fn best_gene(per_gene: impl IntoIterator<Item = f64>) -> (f64, usize) {
    let sanitize = |f: f64| if f.is_nan() { f64::INFINITY } else { f };
    let mut it = per_gene.into_iter().enumerate();
    let Some((_, first)) = it.next() else {
        return (f64::INFINITY, 0);
    };
    let mut best = (sanitize(first), 0);
    for (i, f) in it {
        let f = sanitize(f);
        if f < best.0 {
            best = (f, i);
        }
    }
    best
}

/// Sum of absolute errors of every gene; returns the best gene's fitness and
/// index.
pub fn fitness_regression(matrix: &EvalMatrix<f64>, targets: &[f64]) -> (f64, usize) {
    assert_eq!(matrix.num_cases(), targets.len());
    best_gene((0..matrix.num_genes()).map(|i| {
        matrix
            .gene(i)
            .iter()
            .zip(targets)
            .map(|(o, w)| (o - w).abs())
            .sum::<f64>()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mep::Gene as G;
    use crate::primitives::real;
    use crate::rng::seeded;

    fn abcd() -> PrimitiveSet<f64> {
        PrimitiveSet::new(
            ["a", "b", "c", "d"].map(String::from).to_vec(),
            real::arithmetic(),
        )
        .unwrap()
    }

    /// `{a, b, +1,2, c, d, +4,5, *3,6}` with 1-based labels in the listing.
    pub(crate) fn example_chromosome() -> Chromosome {
        Chromosome::new(vec![
            G::Terminal(0),
            G::Terminal(1),
            G::function(0, &[0, 1]),
            G::Terminal(2),
            G::Terminal(3),
            G::function(0, &[3, 4]),
            G::function(2, &[2, 5]),
        ])
    }

    #[test]
    fn example_chromosome_values() {
        let mut c = example_chromosome();
        let cases = FitnessCases::from_rows(&[vec![1.0, 2.0, 3.0, 4.0]]);
        let m = evaluate_all(&mut c, &abcd(), &cases, &mut seeded(0));
        assert_eq!(m.value(6, 0), 21.0);
        assert_eq!(m.value(2, 0), 3.0);
        assert_eq!(m.value(5, 0), 7.0);
        assert_eq!(m.touches(), 7);
    }

    #[test]
    fn eighth_power() {
        let set = PrimitiveSet::new(vec!["a".into()], real::arithmetic()).unwrap();
        let mut c = Chromosome::new(vec![
            G::Terminal(0),
            G::function(2, &[0, 0]),
            G::function(2, &[1, 1]),
            G::function(2, &[2, 2]),
        ]);
        let cases = FitnessCases::from_rows(&[vec![2.0]]);
        let m = evaluate_all(&mut c, &set, &cases, &mut seeded(0));
        assert_eq!(m.value(3, 0), 256.0);
    }

    #[test]
    fn identity_gene() {
        let set = PrimitiveSet::new(vec!["x".into()], vec![]).unwrap();
        let mut c = Chromosome::new(vec![G::Terminal(0)]);
        let cases = FitnessCases::from_rows(&[vec![5.0]]);
        let m = evaluate_all(&mut c, &set, &cases, &mut seeded(0));
        assert_eq!(m.value(0, 0), 5.0);
        assert_eq!(fitness_regression(&m, &[5.0]), (0.0, 0));
    }

    #[test]
    fn two_gene_regression() {
        let set = PrimitiveSet::new(vec!["a".into(), "b".into()], vec![]).unwrap();
        let mut c = Chromosome::new(vec![G::Terminal(0), G::Terminal(1)]);
        let cases = FitnessCases::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]);
        let m = evaluate_all(&mut c, &set, &cases, &mut seeded(0));
        assert_eq!(fitness_regression(&m, &[1.0, 1.0]), (0.0, 1));
    }

    #[test]
    fn division_by_zero_is_repaired() {
        let set = PrimitiveSet::new(vec!["a".into(), "b".into()], real::arithmetic()).unwrap();
        let mut c = Chromosome::new(vec![G::Terminal(0), G::Terminal(1), G::function(3, &[0, 1])]);
        let cases = FitnessCases::from_rows(&[vec![1.0, 2.0], vec![1.0, 0.0]]);
        let m = evaluate_all(&mut c, &set, &cases, &mut seeded(9));
        assert!(c.genes[2].is_terminal());
        assert!(m.raised(2, 1));
        assert!(!m.raised(2, 0));
        assert!(m.gene(2).iter().all(|v| v.is_finite()));
        let again = evaluate_all(&mut c, &set, &cases, &mut seeded(9));
        assert!(!again.raised(2, 1));
        assert_eq!(again.touches(), 3 * 2);
    }

    #[test]
    fn best_gene_ties_to_lowest() {
        assert_eq!(best_gene([3.0, 1.0, 1.0]), (1.0, 1));
        assert_eq!(best_gene([2.0]), (2.0, 0));
        assert_eq!(best_gene([f64::INFINITY, f64::INFINITY]), (f64::INFINITY, 0));
    }
}
