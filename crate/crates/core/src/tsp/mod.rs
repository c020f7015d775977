//! Traveling Salesman graphs, TSPLIB input, nearest-neighbor and MST
//! baselines, and evolved tour-construction heuristics.

pub mod features;
pub mod heuristic;
pub mod ops;

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

pub use features::{build_tour, Features, ProductMode, FEATURE_NAMES};
pub use heuristic::{heuristic_primitives, run_tsp_heuristic, EvolvedHeuristic, HeuristicProblem, HeuristicRun, TspHeuristicConfig, ValidationRecord};
pub use ops::{common_edges, dpx_crossover, nn_init, two_exchange, two_exchange_at};

/// Complete weighted graph with a symmetric distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TiGraph {
    n: usize,
    dist: Vec<f64>,
}

impl TiGraph {
    /// Validates squareness, symmetry and nonnegativity.
    pub fn new(n: usize, dist: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter("a TSP graph needs at least 2 nodes".into()));
        }
        if dist.len() != n * n {
            return Err(Error::InvalidParameter(format!("distance matrix has {} entries, expected {}", dist.len(), n * n)));
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::InvalidParameter(format!("d({i},{i}) must be 0")));
            }
            for j in 0..n {
                let d = dist[i * n + j];
                if !(d >= 0.0 && d.is_finite()) || d != dist[j * n + i] {
                    return Err(Error::InvalidParameter(format!("d({i},{j}) = {d} is not a symmetric nonnegative distance")));
                }
            }
        }
        Ok(Self { n, dist })
    }

    /// Euclidean distances between points.
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        Self::from_metric(points, |a, b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
    }

    /// TSPLIB EUC_2D distances: Euclidean distance rounded to the nearest
    /// integer.
    pub fn from_points_euc2d(points: &[(f64, f64)]) -> Result<Self> {
        Self::from_metric(points, euc_2d)
    }

    fn from_metric(points: &[(f64, f64)], d: impl Fn((f64, f64), (f64, f64)) -> f64) -> Result<Self> {
        let n = points.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = d(points[i], points[j]);
                dist[i * n + j] = v;
                dist[j * n + i] = v;
            }
        }
        Self::new(n, dist)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Whether `d(i,j) <= d(i,k) + d(k,j)` holds on `trials` random triples
    /// (or on all triples when `trials` is `None`).
    pub fn satisfies_triangle_inequality<R: Rng + ?Sized>(&self, trials: Option<usize>, rng: &mut R) -> bool {
        let ok = |i: usize, j: usize, k: usize| self.d(i, j) <= self.d(i, k) + self.d(k, j) + 1e-9;
        match trials {
            Some(t) => (0..t).all(|_| {
                let mut pick = || rng.random_range(0..self.n);
                ok(pick(), pick(), pick())
            }),
            None => (0..self.n).all(|i| (0..self.n).all(|j| (0..self.n).all(|k| ok(i, j, k)))),
        }
    }
}

/// TSPLIB EUC_2D distance.
pub fn euc_2d(a: (f64, f64), b: (f64, f64)) -> f64 {
    (((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() + 0.5).floor()
}

/// Uniform points in the unit square with Euclidean distances.
pub fn random_ti_graph<R: Rng + ?Sized>(n: usize, rng: &mut R) -> TiGraph {
    let points: Vec<(f64, f64)> = (0..n).map(|_| (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0))).collect();
    TiGraph::from_points(&points).expect("at least two random points")
}

/// Random graphs with node counts uniform in `min_nodes ..= max_nodes`.
pub fn random_graph_set<R: Rng + ?Sized>(count: usize, min_nodes: usize, max_nodes: usize, rng: &mut R) -> Vec<TiGraph> {
    (0..count)
        .map(|_| {
            let n = rng.random_range(min_nodes..=max_nodes);
            random_ti_graph(n, rng)
        })
        .collect()
}

/// A TSPLIB instance with its coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TsplibInstance {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub graph: TiGraph,
}

/// Parses the EUC_2D subset of the TSPLIB format.
pub fn tsplib_parse(text: &str) -> Result<TsplibInstance> {
    let err = |line: usize, message: String| Error::Parse { line, message };
    let mut name = String::new();
    let mut dimension: Option<usize> = None;
    let mut weight_type: Option<String> = None;
    let mut coords: Vec<Option<(f64, f64)>> = Vec::new();
    let mut in_coords = false;
    let mut last_line = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        last_line = line;
        let t = raw.trim();
        if t.is_empty() {
            continue;
        }
        if t == "EOF" {
            break;
        }
        if in_coords {
            let fields: Vec<&str> = t.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(err(line, format!("expected `index x y`, found {t:?}")));
            }
            let idx: usize = fields[0].parse().map_err(|e| err(line, format!("node index {:?}: {e}", fields[0])))?;
            let x: f64 = fields[1].parse().map_err(|e| err(line, format!("x {:?}: {e}", fields[1])))?;
            let y: f64 = fields[2].parse().map_err(|e| err(line, format!("y {:?}: {e}", fields[2])))?;
            if idx == 0 || idx > coords.len() {
                return Err(err(line, format!("node index {idx} outside 1..={}", coords.len())));
            }
            if coords[idx - 1].replace((x, y)).is_some() {
                return Err(err(line, format!("node {idx} listed twice")));
            }
            continue;
        }
        if t == "NODE_COORD_SECTION" {
            let n = dimension.ok_or_else(|| err(line, "NODE_COORD_SECTION before DIMENSION".into()))?;
            match weight_type.as_deref() {
                Some("EUC_2D") => {}
                Some(other) => return Err(err(line, format!("unsupported EDGE_WEIGHT_TYPE {other}"))),
                None => return Err(err(line, "missing EDGE_WEIGHT_TYPE".into())),
            }
            coords = vec![None; n];
            in_coords = true;
            continue;
        }
        let Some((key, value)) = t.split_once(':') else {
            return Err(err(line, format!("unrecognised line {t:?}")));
        };
        let value = value.trim();
        match key.trim() {
            "NAME" => name = value.to_string(),
            "DIMENSION" => dimension = Some(value.parse().map_err(|e| err(line, format!("DIMENSION {value:?}: {e}")))?),
            "EDGE_WEIGHT_TYPE" => weight_type = Some(value.to_string()),
            "TYPE" if value != "TSP" => return Err(err(line, format!("unsupported TYPE {value}"))),
            _ => {}
        }
    }
    if !in_coords {
        return Err(err(last_line, "missing NODE_COORD_SECTION".into()));
    }
    let points = coords
        .iter()
        .enumerate()
        .map(|(i, c)| c.ok_or_else(|| err(last_line, format!("node {} has no coordinates", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    let graph = TiGraph::from_points_euc2d(&points)?;
    Ok(TsplibInstance { name, points, graph })
}

pub fn tsplib_load(path: impl AsRef<Path>) -> Result<TsplibInstance> {
    tsplib_parse(&std::fs::read_to_string(path)?)
}

/// Length of the closed tour.
pub fn tour_length(graph: &TiGraph, tour: &[usize]) -> f64 {
    if tour.len() < 2 {
        return 0.0;
    }
    let open: f64 = tour.windows(2).map(|w| graph.d(w[0], w[1])).sum();
    open + graph.d(tour[tour.len() - 1], tour[0])
}

/// Whether the tour visits every node exactly once.
pub fn is_permutation(tour: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    tour.len() == n && tour.iter().all(|&c| c < n && !std::mem::replace(&mut seen[c], true))
}

/// Greedy nearest unvisited neighbor from `start`; ties to the lowest index.
pub fn nn_tour(graph: &TiGraph, start: usize) -> Vec<usize> {
    let n = graph.len();
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    tour.push(cur);
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !visited[j])
            .fold(None, |best: Option<usize>, j| match best {
                Some(b) if graph.d(cur, b) <= graph.d(cur, j) => Some(b),
                _ => Some(j),
            })
            .expect("an unvisited node remains");
        visited[next] = true;
        tour.push(next);
        cur = next;
    }
    tour
}

/// Prim's minimum spanning tree rooted at node 0, as a parent array
/// (`parent[0] == None`).
pub fn mst_parents(graph: &TiGraph) -> Vec<Option<usize>> {
    let n = graph.len();
    let mut in_tree = vec![false; n];
    let mut key = vec![f64::INFINITY; n];
    let mut parent = vec![None; n];
    key[0] = 0.0;
    for _ in 0..n {
        let u = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| key[a].total_cmp(&key[b]))
            .expect("a node remains outside the tree");
        in_tree[u] = true;
        for v in 0..n {
            if !in_tree[v] && graph.d(u, v) < key[v] {
                key[v] = graph.d(u, v);
                parent[v] = Some(u);
            }
        }
    }
    parent
}

pub fn mst_weight(graph: &TiGraph) -> f64 {
    mst_parents(graph)
        .iter()
        .enumerate()
        .filter_map(|(v, p)| p.map(|u| graph.d(u, v)))
        .sum()
}

/// Preorder walk of the MST rooted at node 0, children in ascending order.
pub fn mst_tour(graph: &TiGraph) -> Vec<usize> {
    let parents = mst_parents(graph);
    let mut children = vec![Vec::new(); graph.len()];
    for (v, p) in parents.iter().enumerate() {
        if let Some(u) = p {
            children[*u].push(v);
        }
    }
    let mut tour = Vec::with_capacity(graph.len());
    let mut stack = vec![0];
    while let Some(u) = stack.pop() {
        tour.push(u);
        stack.extend(children[u].iter().rev());
    }
    tour
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn square() -> TiGraph {
        TiGraph::from_points(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]).unwrap()
    }

    #[test]
    fn unit_square_nn_is_optimal() {
        let g = square();
        let t = nn_tour(&g, 0);
        assert!(is_permutation(&t, 4));
        assert!((tour_length(&g, &t) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mst_tour_bound() {
        let mut rng = seeded(11);
        for _ in 0..20 {
            let g = random_ti_graph(25, &mut rng);
            let t = mst_tour(&g);
            assert!(is_permutation(&t, 25));
            assert!(tour_length(&g, &t) <= 2.0 * mst_weight(&g) + 1e-9);
        }
    }

    #[test]
    fn euc_2d_rounding() {
        assert_eq!(euc_2d((0.0, 0.0), (3.0, 4.0)), 5.0);
        assert_eq!(euc_2d((0.0, 0.0), (1.0, 1.0)), 1.0);
    }

    #[test]
    fn random_graphs_are_metric() {
        let mut rng = seeded(2);
        let g = random_ti_graph(40, &mut rng);
        assert!(g.satisfies_triangle_inequality(Some(1000), &mut rng));
    }

    #[test]
    fn rejects_asymmetric_matrix() {
        assert!(TiGraph::new(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
    }

    #[test]
    fn tsplib_errors_carry_lines() {
        let text = "NAME: t\nTYPE: TSP\nDIMENSION: 2\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 x 4\nEOF\n";
        assert!(matches!(tsplib_parse(text), Err(Error::Parse { line: 7, .. })));
        let geo = "NAME: t\nDIMENSION: 2\nEDGE_WEIGHT_TYPE: GEO\nNODE_COORD_SECTION\n";
        assert!(matches!(tsplib_parse(geo), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn tsplib_small_instance() {
        let text = "NAME: t\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 3 4\n3 0 4\nEOF\n";
        let inst = tsplib_parse(text).unwrap();
        assert_eq!(inst.graph.len(), 3);
        assert_eq!(inst.graph.d(0, 1), 5.0);
        assert_eq!(tour_length(&inst.graph, &[0, 1, 2]), 12.0);
    }
}
