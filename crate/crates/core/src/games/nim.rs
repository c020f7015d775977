//! Nim: evolving a formula that recognises P-positions.
//!
//! Every configuration reachable from the initial one is labelled P when the
//! formula evaluates to 0 and N otherwise. A formula is scored by how many
//! times the labelling breaks the rules a correct P/N labelling obeys:
//!
//! 1. every move from a P node leads to an N node (one violation per
//!    offending move);
//! 2. every non-terminal N node has at least one move to a P node;
//! 3. terminal nodes are P nodes.

use std::collections::HashMap;

use rand::Rng;

use crate::error::Result;
use crate::mep::{best_gene, evaluate_all, Chromosome, FitnessCases};
use crate::primitives::{integer, PrimitiveSet};

/// A Nim configuration with heap sizes sorted ascending, so permutations of
/// the same configuration compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NimState(Vec<u32>);

impl NimState {
    pub fn new(mut heaps: Vec<u32>) -> Self {
        heaps.sort_unstable();
        Self(heaps)
    }

    pub fn heaps(&self) -> &[u32] {
        &self.0
    }

    pub fn is_terminal(&self) -> bool {
        self.0.iter().all(|&h| h == 0)
    }
}

/// Largest removal allowed in the mod-`k` variant whose P-positions are
/// recognised by [`bouton_modk`] with the same `k`.
pub fn modk_cap(k: u32) -> u32 {
    k.saturating_sub(1).max(1)
}

/// All configurations one move away: remove between 1 and `cap` objects
/// (unbounded when `None`) from a single heap.
pub fn nim_successors(state: &NimState, cap: Option<u32>) -> Vec<NimState> {
    let mut out: Vec<NimState> = Vec::new();
    for (i, &h) in state.0.iter().enumerate() {
        let most = cap.map_or(h, |c| c.min(h));
        for take in 1..=most {
            let mut heaps = state.0.clone();
            heaps[i] = h - take;
            let next = NimState::new(heaps);
            if !out.contains(&next) {
                out.push(next);
            }
        }
    }
    out.sort();
    out
}

/// The game DAG of distinct configurations reachable from an initial one.
#[derive(Debug, Clone)]
pub struct NimTree {
    pub states: Vec<NimState>,
    pub successors: Vec<Vec<usize>>,
    pub cap: Option<u32>,
}

impl NimTree {
    pub fn build(initial: &NimState, cap: Option<u32>) -> Self {
        let mut index: HashMap<NimState, usize> = HashMap::new();
        let mut states = vec![initial.clone()];
        index.insert(initial.clone(), 0);
        let mut successors: Vec<Vec<usize>> = Vec::new();
        let mut next = 0;
        while next < states.len() {
            let here = states[next].clone();
            let mut links = Vec::new();
            for s in nim_successors(&here, cap) {
                let id = *index.entry(s.clone()).or_insert_with(|| {
                    states.push(s);
                    states.len() - 1
                });
                links.push(id);
            }
            successors.push(links);
            next += 1;
        }
        Self {
            states,
            successors,
            cap,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Violations of the P/N rules for a labelling (`true` marks P).
    pub fn violations(&self, is_p: &[bool]) -> usize {
        let mut count = 0;
        for (node, links) in self.successors.iter().enumerate() {
            if links.is_empty() {
                count += usize::from(!is_p[node]);
            } else if is_p[node] {
                count += links.iter().filter(|&&s| is_p[s]).count();
            } else if !links.iter().any(|&s| is_p[s]) {
                count += 1;
            }
        }
        count
    }

    /// Exact P/N labelling by backward induction (normal play).
    pub fn exact_labels(&self) -> Vec<bool> {
        let mut label: Vec<Option<bool>> = vec![None; self.len()];
        fn visit(t: &NimTree, n: usize, label: &mut Vec<Option<bool>>) -> bool {
            if let Some(l) = label[n] {
                return l;
            }
            let p = t.successors[n].iter().all(|&s| !visit(t, s, label));
            label[n] = Some(p);
            p
        }
        for n in 0..self.len() {
            visit(self, n, &mut label);
        }
        label.into_iter().map(|l| l.unwrap()).collect()
    }
}

/// Violation count of a formula; a state is P iff the formula yields 0.
pub fn nim_violations(
    formula: impl Fn(&NimState) -> i64,
    initial: &NimState,
    cap: Option<u32>,
) -> usize {
    let tree = NimTree::build(initial, cap);
    let labels: Vec<bool> = tree.states.iter().map(|s| formula(s) == 0).collect();
    tree.violations(&labels)
}

/// Xor of the heap sizes.
pub fn bouton(state: &NimState) -> i64 {
    state.0.iter().fold(0, |acc, &h| acc ^ h as i64)
}

/// Xor of the heap sizes taken modulo `k`.
pub fn bouton_modk(state: &NimState, k: u32) -> i64 {
    state.0.iter().fold(0, |acc, &h| acc ^ (h % k) as i64)
}

/// Nim formula evolution with MEP over integer values.
#[derive(Debug, Clone)]
pub struct NimProblem {
    pub tree: NimTree,
    pub set: PrimitiveSet<i64>,
    cases: FitnessCases<i64>,
}

impl NimProblem {
    /// Terminals are `n`, then `k` when `k` is given, then `a1 .. an`.
    pub fn new(initial: &NimState, cap: Option<u32>, k: Option<u32>) -> Result<Self> {
        let tree = NimTree::build(initial, cap);
        let heaps = initial.heaps().len();
        let mut terminals = vec!["n".to_string()];
        if k.is_some() {
            terminals.push("k".into());
        }
        terminals.extend((1..=heaps).map(|i| format!("a{i}")));
        let set = PrimitiveSet::new(terminals, integer::nim_set())?;
        let rows: Vec<Vec<i64>> = tree
            .states
            .iter()
            .map(|s| {
                let mut row = vec![heaps as i64];
                if let Some(k) = k {
                    row.push(k as i64);
                }
                row.extend(s.heaps().iter().map(|&h| h as i64));
                row
            })
            .collect();
        let cases = FitnessCases::from_rows(&rows);
        Ok(Self { tree, set, cases })
    }

    /// Violation count of every gene's formula.
    pub fn gene_violations<R: Rng + ?Sized>(
        &self,
        chromosome: &mut Chromosome,
        rng: &mut R,
    ) -> Vec<usize> {
        let m = evaluate_all(chromosome, &self.set, &self.cases, rng);
        (0..m.num_genes())
            .map(|i| {
                let labels: Vec<bool> = m.gene(i).iter().map(|&v| v == 0).collect();
                self.tree.violations(&labels)
            })
            .collect()
    }

    /// Lowest violation count over the genes and the gene attaining it.
    pub fn fitness<R: Rng + ?Sized>(&self, chromosome: &mut Chromosome, rng: &mut R) -> (f64, usize) {
        best_gene(self.gene_violations(chromosome, rng).into_iter().map(|v| v as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(h: &[u32]) -> NimState {
        NimState::new(h.to_vec())
    }

    #[test]
    fn successors_are_canonical() {
        let s = nim_successors(&st(&[2, 1]), None);
        assert_eq!(s, vec![st(&[0, 1]), st(&[0, 2]), st(&[1, 1])]);
        assert!(nim_successors(&st(&[0, 0]), None).is_empty());
    }

    #[test]
    fn full_tree_size() {
        assert_eq!(NimTree::build(&st(&[4, 4, 4, 4]), None).len(), 70);
    }

    #[test]
    fn hand_example_has_four_violations() {
        let e = |s: &NimState| {
            let (a1, a2) = (s.heaps()[0] as i64, s.heaps()[1] as i64);
            a1 - a2 * a1
        };
        assert_eq!(nim_violations(e, &st(&[2, 1]), None), 4);
    }

    #[test]
    fn constant_one_on_terminal() {
        assert_eq!(nim_violations(|_| 1, &st(&[0, 0]), None), 1);
    }

    #[test]
    fn bouton_values() {
        assert_eq!(bouton(&st(&[1, 2, 3])), 0);
        assert_eq!(bouton(&st(&[4, 4, 4, 4])), 0);
        assert_eq!(bouton_modk(&st(&[4, 4, 4, 4]), 2), 0);
    }

    #[test]
    fn exact_labels_agree_with_bouton() {
        let t = NimTree::build(&st(&[3, 4, 5]), None);
        let exact = t.exact_labels();
        for (s, p) in t.states.iter().zip(exact) {
            assert_eq!(bouton(s) == 0, p);
        }
    }

    #[test]
    fn modk_cap_matches_formula() {
        for k in 2..=4 {
            let t = NimTree::build(&st(&[4, 4, 4]), Some(modk_cap(k)));
            let labels: Vec<bool> = t.states.iter().map(|s| bouton_modk(s, k) == 0).collect();
            assert_eq!(t.violations(&labels), 0, "k = {k}");
        }
    }
}
