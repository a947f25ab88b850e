//! Interaction graphs: the complete graph (well-mixed population), the
//! von Neumann square lattice and Barabási–Albert scale-free networks.
//!
//! Graphs are simple and undirected. Adjacency lists are sorted, so two
//! graphs with the same edge set compare equal and serialize identically.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeDims {
    pub rows: usize,
    pub cols: usize,
    pub periodic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    lattice: Option<LatticeDims>,
}

impl Graph {
    /// Builds a graph from an edge list. Self-loops and duplicates are
    /// rejected.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); node_count];
        for &(i, j) in edges {
            if i >= node_count || j >= node_count {
                return Err(invalid(
                    "edges",
                    format!("edge ({i}, {j}) references a node >= {node_count}"),
                ));
            }
            if i == j {
                return Err(invalid("edges", format!("self-loop at node {i}")));
            }
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for (i, nbrs) in adjacency.iter_mut().enumerate() {
            nbrs.sort_unstable();
            let before = nbrs.len();
            nbrs.dedup();
            if nbrs.len() != before {
                return Err(invalid("edges", format!("duplicate edge at node {i}")));
            }
        }
        Ok(Self {
            adjacency,
            lattice: None,
        })
    }

    /// Every pair of the `n` nodes is linked.
    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("n", format!("complete graph needs n >= 2, got {n}")));
        }
        let adjacency = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).collect())
            .collect();
        Ok(Self {
            adjacency,
            lattice: None,
        })
    }

    /// `rows x cols` grid with four-neighbor (von Neumann) links. Node
    /// `(r, c)` has index `r * cols + c`. Without wrap-around, edge nodes
    /// have three neighbors and corners two; the periodic version is a torus
    /// and needs both sides of at least 3 to stay simple.
    pub fn square_lattice(rows: usize, cols: usize, periodic: bool) -> Result<Self> {
        let min = if periodic { 3 } else { 2 };
        if rows < min || cols < min {
            return Err(invalid(
                "lattice",
                format!("dimensions must be at least {min}x{min}, got {rows}x{cols}"),
            ));
        }
        let idx = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::with_capacity(2 * rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((idx(r, c), idx(r, c + 1)));
                } else if periodic {
                    edges.push((idx(r, c), idx(r, 0)));
                }
                if r + 1 < rows {
                    edges.push((idx(r, c), idx(r + 1, c)));
                } else if periodic {
                    edges.push((idx(r, c), idx(0, c)));
                }
            }
        }
        let mut g = Self::from_edges(rows * cols, &edges)?;
        g.lattice = Some(LatticeDims {
            rows,
            cols,
            periodic,
        });
        Ok(g)
    }

    /// Preferential-attachment growth from a complete seed of `m + 1` nodes;
    /// each arriving node links to `m` distinct existing nodes chosen with
    /// probability proportional to degree.
    pub fn barabasi_albert(n: usize, m: usize, seed: u64) -> Result<Self> {
        if m < 1 {
            return Err(invalid("m", "must be at least 1"));
        }
        if n <= m {
            return Err(invalid("n", format!("need n > m, got n={n}, m={m}")));
        }
        let mut rng = rng_from_seed(seed);
        let seed_nodes = (m + 1).min(n);
        let mut edges = Vec::with_capacity(n * m);
        // Every edge endpoint appears once here, so a uniform pick from it
        // is a degree-proportional pick of a node.
        let mut endpoints: Vec<usize> = Vec::with_capacity(2 * n * m);
        for i in 0..seed_nodes {
            for j in (i + 1)..seed_nodes {
                edges.push((i, j));
                endpoints.push(i);
                endpoints.push(j);
            }
        }
        let mut targets = Vec::with_capacity(m);
        for v in seed_nodes..n {
            targets.clear();
            while targets.len() < m {
                let t = endpoints[rng.gen_range(0..endpoints.len())];
                if !targets.contains(&t) {
                    targets.push(t);
                }
            }
            for &t in &targets {
                edges.push((t, v));
                endpoints.push(t);
                endpoints.push(v);
            }
        }
        Self::from_edges(n, &edges)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn lattice_dims(&self) -> Option<LatticeDims> {
        self.lattice
    }

    /// Edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, nbrs)| nbrs.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// One `"i j"` line per edge, `i < j`, sorted, LF-terminated.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.edges() {
            writeln!(out, "{i} {j}").expect("writing to a String");
        }
        out
    }

    /// Parses the format written by [`Graph::to_edge_list`]. The node count
    /// is one more than the largest index.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: &str| Error::EdgeList {
                line: lineno + 1,
                reason: reason.to_string(),
            };
            let mut parts = line.split_whitespace();
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err("expected two node indices"));
            };
            let a: usize = a.parse().map_err(|_| err("bad node index"))?;
            let b: usize = b.parse().map_err(|_| err("bad node index"))?;
            max = max.max(Some(a.max(b)));
            edges.push((a, b));
        }
        Self::from_edges(max.map_or(0, |m| m + 1), &edges)
    }

    /// Whether every node can reach every other.
    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &self.adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeStats {
    /// `2 |E| / |V|`.
    pub mean_degree: f64,
    pub max_degree: usize,
    pub histogram: BTreeMap<usize, usize>,
    /// Slope of a least-squares fit of `ln(count)` against `ln(degree)`,
    /// negated; only a rough diagnostic of the tail.
    pub tail_exponent_estimate: Option<f64>,
}

pub fn degree_stats(g: &Graph) -> DegreeStats {
    let n = g.node_count();
    let mut histogram = BTreeMap::new();
    for i in 0..n {
        *histogram.entry(g.degree(i)).or_insert(0) += 1;
    }
    let mean_degree = if n == 0 {
        0.0
    } else {
        2.0 * g.edge_count() as f64 / n as f64
    };
    let max_degree = histogram.keys().next_back().copied().unwrap_or(0);
    DegreeStats {
        mean_degree,
        max_degree,
        tail_exponent_estimate: tail_exponent(&histogram),
        histogram,
    }
}

fn tail_exponent(histogram: &BTreeMap<usize, usize>) -> Option<f64> {
    let min_degree = histogram.keys().copied().find(|&d| d > 0)?;
    let pts: Vec<(f64, f64)> = histogram
        .iter()
        .filter(|(&d, _)| d >= min_degree)
        .map(|(&d, &c)| ((d as f64).ln(), (c as f64).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}
