//! Permutation operators on tours: nearest-neighbor initialisation, DPX
//! recombination and 2-exchange mutation.

use rand::Rng;

use super::{nn_tour, TiGraph};

/// Nearest-neighbor tour from a uniformly drawn start city.
pub fn nn_init<R: Rng + ?Sized>(graph: &TiGraph, rng: &mut R) -> Vec<usize> {
    nn_tour(graph, rng.random_range(0..graph.len()))
}

/// Successor and predecessor of every city in a closed tour.
fn neighbors(tour: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let n = tour.len();
    let mut succ = vec![0; n];
    let mut pred = vec![0; n];
    for k in 0..n {
        let a = tour[k];
        let b = tour[(k + 1) % n];
        succ[a] = b;
        pred[b] = a;
    }
    (succ, pred)
}

/// Whether the undirected edge {a, b} belongs to the tour described by
/// `(succ, pred)`.
fn has_edge(adj: &(Vec<usize>, Vec<usize>), a: usize, b: usize) -> bool {
    adj.0[a] == b || adj.1[a] == b
}

/// Undirected edges shared by both tours.
pub fn common_edges(p1: &[usize], p2: &[usize]) -> Vec<(usize, usize)> {
    let a2 = neighbors(p2);
    let n = p1.len();
    (0..n)
        .map(|k| (p1[k], p1[(k + 1) % n]))
        .filter(|&(a, b)| has_edge(&a2, a, b))
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect()
}

/// Distance-preserving crossover: the offspring keeps every edge common to
/// both parents. The common-edge fragments are chained greedily from the
/// fragment holding `p1[0]`, each time moving to the nearest free fragment
/// endpoint whose connecting edge lies in neither parent, or to the nearest
/// free endpoint when every candidate edge is a parent edge.
pub fn dpx_crossover(graph: &TiGraph, p1: &[usize], p2: &[usize]) -> Vec<usize> {
    let n = p1.len();
    assert_eq!(n, p2.len(), "parents must have equal length");
    if n < 3 {
        return p1.to_vec();
    }
    let a1 = neighbors(p1);
    let a2 = neighbors(p2);
    let common = |k: usize| has_edge(&a2, p1[k], p1[(k + 1) % n]);
    let Some(cut) = (0..n).find(|&k| !common(k)) else {
        return p1.to_vec();
    };
    let mut fragments: Vec<Vec<usize>> = Vec::new();
    let mut current = Vec::new();
    for step in 1..=n {
        let k = (cut + step) % n;
        current.push(p1[k]);
        if !common(k) {
            fragments.push(std::mem::take(&mut current));
        }
    }
    let first = fragments.iter().position(|f| f.contains(&p1[0])).expect("p1[0] lies in a fragment");
    let mut used = vec![false; fragments.len()];
    used[first] = true;
    let mut child = fragments[first].clone();
    for _ in 1..fragments.len() {
        let end = *child.last().expect("child is nonempty");
        let mut best: Option<(bool, f64, usize, bool)> = None;
        for (f, frag) in fragments.iter().enumerate() {
            if used[f] {
                continue;
            }
            let ends = [(frag[0], false), (frag[frag.len() - 1], true)];
            for (city, reversed) in ends {
                let parent_edge = has_edge(&a1, end, city) || has_edge(&a2, end, city);
                let key = (parent_edge, graph.d(end, city), f, reversed);
                if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
                    best = Some(key);
                }
            }
        }
        let (_, _, f, reversed) = best.expect("a free fragment remains");
        used[f] = true;
        if reversed {
            child.extend(fragments[f].iter().rev());
        } else {
            child.extend(&fragments[f]);
        }
    }
    child
}

/// Removes the edges after positions `i` and `j` (`i < j`) and reverses the
/// cities between them.
pub fn two_exchange_at(tour: &mut [usize], i: usize, j: usize) {
    assert!(i < j && j < tour.len(), "positions must satisfy i < j < n");
    tour[i + 1..=j].reverse();
}

/// 2-exchange at two distinct uniformly drawn positions.
pub fn two_exchange<R: Rng + ?Sized>(tour: &mut [usize], rng: &mut R) {
    let n = tour.len();
    if n < 4 {
        return;
    }
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    two_exchange_at(tour, a.min(b), a.max(b));
}
