//! Path features seen by a node-scoring heuristic and the greedy tour
//! constructor that consults it.

use serde::{Deserialize, Serialize};

use super::TiGraph;

/// Terminal names, in the order of [`Features::values`].
pub const FEATURE_NAMES: [&str; 10] = [
    "d_y1_y2", "min_g_y1", "min_g_y2", "max_g_y1", "max_g_y2", "sum_g_y1", "sum_g_y2", "prod_g_y1", "prod_g_y2",
    "length",
];

pub const D_Y1_Y2: usize = 0;
pub const MIN_G_Y1: usize = 1;
pub const MIN_G_Y2: usize = 2;
pub const MAX_G_Y1: usize = 3;
pub const MAX_G_Y2: usize = 4;
pub const SUM_G_Y1: usize = 5;
pub const SUM_G_Y2: usize = 6;
pub const PROD_G_Y1: usize = 7;
pub const PROD_G_Y2: usize = 8;
pub const LENGTH: usize = 9;

/// How the product aggregates are reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductMode {
    /// The plain product of distances.
    Raw,
    /// The natural logarithm of the product.
    Log,
    /// `Raw` for graphs with at most this many nodes, `Log` above.
    Auto(usize),
}

impl Default for ProductMode {
    fn default() -> Self {
        ProductMode::Auto(30)
    }
}

impl ProductMode {
    fn uses_log(self, n: usize) -> bool {
        match self {
            ProductMode::Raw => false,
            ProductMode::Log => true,
            ProductMode::Auto(limit) => n > limit,
        }
    }
}

/// Feature vector for scoring candidate `y2` from the current node `y1`.
///
/// The `_y1` aggregates range over every unvisited node; the `_y2`
/// aggregates range over the unvisited nodes other than `y2`. An empty
/// range gives min = max = sum = 0 and product 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Features {
    pub values: [f64; 10],
}

/// Per-node distance aggregates over the unvisited set, updated as nodes
/// are visited.
#[derive(Debug, Clone)]
struct Aggregates {
    n: usize,
    /// Neighbors of each node sorted by ascending distance.
    sorted: Vec<usize>,
    lo: Vec<usize>,
    hi: Vec<usize>,
    sum: Vec<f64>,
    log_sum: Vec<f64>,
    zeros: Vec<usize>,
    count: usize,
}

impl Aggregates {
    fn new(graph: &TiGraph) -> Self {
        let n = graph.len();
        let mut sorted = Vec::with_capacity(n * (n - 1));
        let mut sum = vec![0.0; n];
        let mut log_sum = vec![0.0; n];
        let mut zeros = vec![0; n];
        for v in 0..n {
            let mut row: Vec<usize> = (0..n).filter(|&u| u != v).collect();
            row.sort_by(|&a, &b| graph.d(v, a).total_cmp(&graph.d(v, b)).then(a.cmp(&b)));
            for &u in &row {
                let d = graph.d(v, u);
                sum[v] += d;
                if d == 0.0 {
                    zeros[v] += 1;
                } else {
                    log_sum[v] += d.ln();
                }
            }
            sorted.extend(row);
        }
        Self {
            n,
            sorted,
            lo: vec![0; n],
            hi: vec![n - 2; n],
            sum,
            log_sum,
            zeros,
            count: n,
        }
    }

    fn visit(&mut self, graph: &TiGraph, w: usize) {
        self.count -= 1;
        for v in 0..self.n {
            if v == w {
                continue;
            }
            let d = graph.d(v, w);
            self.sum[v] -= d;
            if d == 0.0 {
                self.zeros[v] -= 1;
            } else {
                self.log_sum[v] -= d.ln();
            }
        }
    }

    /// Aggregates of `v` over unvisited nodes other than `v`:
    /// (min, max, sum, product).
    fn of(&mut self, graph: &TiGraph, visited: &[bool], v: usize, mode_log: bool) -> [f64; 4] {
        let others = self.count - usize::from(!visited[v]);
        if others == 0 {
            return [0.0, 0.0, 0.0, if mode_log { 0.0 } else { 1.0 }];
        }
        let row = &self.sorted[v * (self.n - 1)..(v + 1) * (self.n - 1)];
        while visited[row[self.lo[v]]] {
            self.lo[v] += 1;
        }
        while visited[row[self.hi[v]]] {
            self.hi[v] -= 1;
        }
        let min = graph.d(v, row[self.lo[v]]);
        let max = graph.d(v, row[self.hi[v]]);
        let prod = match (mode_log, self.zeros[v] > 0) {
            (false, true) => 0.0,
            (false, false) => self.log_sum[v].exp(),
            (true, true) => f64::MIN_POSITIVE.ln(),
            (true, false) => self.log_sum[v],
        };
        [min, max, self.sum[v].max(0.0), prod]
    }
}

/// A graph with its neighbor orderings precomputed, for building many
/// tours on the same graph.
#[derive(Debug, Clone)]
pub struct TourBuilder<'a> {
    graph: &'a TiGraph,
    base: Aggregates,
}

impl<'a> TourBuilder<'a> {
    pub fn new(graph: &'a TiGraph) -> Self {
        Self {
            graph,
            base: Aggregates::new(graph),
        }
    }

    pub fn graph(&self) -> &'a TiGraph {
        self.graph
    }

    /// Builds a tour from `start` by repeatedly moving to the unvisited
    /// node with the lowest score (ties to the lowest index). Returns the
    /// tour and its closed length, or the first error raised by `score`.
    pub fn tour_from<E>(
        &self,
        start: usize,
        mode: ProductMode,
        mut score: impl FnMut(&Features) -> Result<f64, E>,
    ) -> Result<(Vec<usize>, f64), E> {
        let graph = self.graph;
        let n = graph.len();
        let log = mode.uses_log(n);
        let mut agg = self.base.clone();
        let mut visited = vec![false; n];
        let mut tour = Vec::with_capacity(n);
        let mut length = 0.0;
        let mut cur = start;
        visited[cur] = true;
        agg.visit(graph, cur);
        tour.push(cur);
        for _ in 1..n {
            let [min1, max1, sum1, prod1] = agg.of(graph, &visited, cur, log);
            let mut best: Option<(usize, f64)> = None;
            for y2 in 0..n {
                if visited[y2] {
                    continue;
                }
                let [min2, max2, sum2, prod2] = agg.of(graph, &visited, y2, log);
                let features = Features {
                    values: [graph.d(cur, y2), min1, min2, max1, max2, sum1, sum2, prod1, prod2, length],
                };
                let s = score(&features)?;
                if best.is_none_or(|(_, b)| s < b) {
                    best = Some((y2, s));
                }
            }
            let (next, _) = best.expect("an unvisited node remains");
            length += graph.d(cur, next);
            visited[next] = true;
            agg.visit(graph, next);
            tour.push(next);
            cur = next;
        }
        length += graph.d(cur, start);
        Ok((tour, length))
    }
}

/// Builds a tour from `start`; see [`TourBuilder::tour_from`].
pub fn build_tour_from<E>(
    graph: &TiGraph,
    start: usize,
    mode: ProductMode,
    score: impl FnMut(&Features) -> Result<f64, E>,
) -> Result<(Vec<usize>, f64), E> {
    TourBuilder::new(graph).tour_from(start, mode, score)
}

/// [`build_tour_from`] starting at node 0.
pub fn build_tour<E>(
    graph: &TiGraph,
    mode: ProductMode,
    score: impl FnMut(&Features) -> Result<f64, E>,
) -> Result<(Vec<usize>, f64), E> {
    build_tour_from(graph, 0, mode, score)
}

/// The shortest tour over every start node.
pub fn build_tour_best_start<E>(
    graph: &TiGraph,
    mode: ProductMode,
    mut score: impl FnMut(&Features) -> Result<f64, E>,
) -> Result<(Vec<usize>, f64), E> {
    let builder = TourBuilder::new(graph);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for start in 0..graph.len() {
        let t = builder.tour_from(start, mode, &mut score)?;
        if best.as_ref().is_none_or(|b| t.1 < b.1) {
            best = Some(t);
        }
    }
    Ok(best.expect("at least one start node"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::tsp::{is_permutation, nn_tour, random_ti_graph, tour_length};
    use std::convert::Infallible;

    fn by(feature: usize) -> impl FnMut(&Features) -> Result<f64, Infallible> {
        move |f| Ok(f.values[feature])
    }

    fn equilateral() -> TiGraph {
        TiGraph::new(3, vec![0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn hand_features_on_equilateral_graph() {
        let mut seen = Vec::new();
        build_tour(&equilateral(), ProductMode::Raw, |f| {
            seen.push(f.values);
            Ok::<_, Infallible>(0.0)
        })
        .unwrap();
        let first = seen[0];
        assert_eq!(first[D_Y1_Y2], 1.0);
        assert_eq!(first[MIN_G_Y1], 1.0);
        assert_eq!(first[SUM_G_Y1], 2.0);
        assert_eq!(first[SUM_G_Y2], 1.0);
        assert_eq!(first[PROD_G_Y1], 1.0);
        assert_eq!(first[LENGTH], 0.0);
        let last = seen[2];
        assert_eq!(last[SUM_G_Y1], 1.0);
        assert_eq!(last[MIN_G_Y2], 0.0);
        assert_eq!(last[PROD_G_Y2], 1.0);
        assert_eq!(last[LENGTH], 1.0);
    }

    #[test]
    fn equilateral_tour_length() {
        let (tour, len) = build_tour(&equilateral(), ProductMode::Raw, by(SUM_G_Y2)).unwrap();
        assert!(is_permutation(&tour, 3));
        assert_eq!(len, 3.0);
    }

    #[test]
    fn distance_feature_reproduces_nearest_neighbor() {
        let mut rng = seeded(5);
        for n in [2, 5, 17, 60] {
            let g = random_ti_graph(n, &mut rng);
            let (tour, len) = build_tour(&g, ProductMode::default(), by(D_Y1_Y2)).unwrap();
            assert_eq!(tour, nn_tour(&g, 0));
            assert!((len - tour_length(&g, &tour)).abs() < 1e-9);
        }
    }

    #[test]
    fn incremental_aggregates_match_direct() {
        let mut rng = seeded(8);
        let g = random_ti_graph(12, &mut rng);
        let (tour, _) = build_tour(&g, ProductMode::Raw, by(MAX_G_Y2)).unwrap();
        let mut visited = [false; 12];
        let mut step = 0;
        build_tour(&g, ProductMode::Raw, |f| {
            let y1 = tour[step];
            if !visited[y1] {
                visited[y1] = true;
            }
            let candidates: Vec<usize> = (0..12).filter(|&u| !visited[u]).collect();
            let y2 = *candidates.iter().find(|&&u| g.d(y1, u) == f.values[D_Y1_Y2]).unwrap();
            let all_y1: Vec<f64> = candidates.iter().map(|&u| g.d(y1, u)).collect();
            let all_y2: Vec<f64> = candidates.iter().filter(|&&u| u != y2).map(|&u| g.d(y2, u)).collect();
            let sum1: f64 = all_y1.iter().sum();
            let prod1: f64 = all_y1.iter().product();
            let max2 = all_y2.iter().copied().fold(0.0, f64::max);
            assert!((f.values[SUM_G_Y1] - sum1).abs() < 1e-9);
            assert!((f.values[PROD_G_Y1] - prod1).abs() < 1e-9 * prod1.max(1.0));
            assert_eq!(f.values[MAX_G_Y2], max2);
            if candidates.last() == Some(&y2) {
                step += 1;
            }
            Ok::<_, Infallible>(f.values[MAX_G_Y2])
        })
        .unwrap();
    }

    #[test]
    fn log_mode_reports_log_product() {
        let g = equilateral();
        let mut first = None;
        build_tour(&g, ProductMode::Log, |f| {
            first.get_or_insert(f.values);
            Ok::<_, Infallible>(0.0)
        })
        .unwrap();
        assert_eq!(first.unwrap()[PROD_G_Y1], 0.0);
    }

    #[test]
    fn best_start_is_no_worse() {
        let g = random_ti_graph(20, &mut seeded(1));
        let (_, from0) = build_tour(&g, ProductMode::Raw, by(D_Y1_Y2)).unwrap();
        let (t, best) = build_tour_best_start(&g, ProductMode::Raw, by(D_Y1_Y2)).unwrap();
        assert!(is_permutation(&t, 20));
        assert!(best <= from0);
    }
}
