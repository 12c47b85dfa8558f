//! Undirected interaction graphs over agents `0..n`.
//!
//! A [`Graph`] is a simple undirected graph stored as a canonically sorted
//! edge list plus per-node adjacency. Edges are unordered pairs `{i, j}` kept
//! in `i < j` orientation; the index of an edge in [`Graph::edges`] is the
//! stable identity used by the edge-triggered protocols and in event logs.
//!
//! Connectivity is *reported*, never silently required: disconnected graphs
//! simulate fine (consensus then happens per component), so callers decide
//! whether [`Graph::is_connected`] matters for them.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use thiserror::Error;

/// How many candidate graphs [`Graph::erdos_renyi`] samples before giving up
/// on finding a connected one.
pub const ER_CONNECTIVITY_ATTEMPTS: usize = 1000;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: self-loop on node {node} is not allowed")]
    SelfLoop { line: usize, node: usize },
    #[error("line {line}: expected two integer node ids, got {found:?}")]
    Malformed { line: usize, found: String },
    #[error("edge list is empty: no edges and no nodes can be inferred")]
    EmptyEdgeList,
    #[error("self-loop on node {node} is not allowed")]
    SelfLoopEdge { node: usize },
    #[error("edge {i}-{j} references node {j} but the graph has only {n} nodes")]
    NodeOutOfRange { i: usize, j: usize, n: usize },
    #[error("{what} needs at least {min} nodes, got {n}")]
    TooSmall {
        what: &'static str,
        min: usize,
        n: usize,
    },
    #[error("edge probability must lie in [0, 1], got {p}")]
    BadProbability { p: f64 },
    #[error("no connected graph in {attempts} samples (n = {n}, p = {p}); raise p or change the seed")]
    ConnectivityExhausted { attempts: usize, n: usize, p: f64 },
    #[error("state vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Simple undirected graph with canonical edge ordering.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    /// Edges as `(i, j)` with `i < j`, sorted lexicographically, deduplicated.
    edges: Vec<(usize, usize)>,
    /// `neighbors[i]` is sorted ascending.
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph on `n` nodes from an edge iterator. Edges may come in
    /// any orientation and may repeat; they are canonicalized and
    /// deduplicated. Self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(GraphError::SelfLoopEdge { node: a });
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if j >= n {
                return Err(GraphError::NodeOutOfRange { i, j, n });
            }
            set.insert((i, j));
        }
        let edges: Vec<(usize, usize)> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for adj in &mut neighbors {
            adj.sort_unstable();
        }
        Ok(Graph {
            n,
            edges,
            neighbors,
        })
    }

    /// Parses the plain-text edge-list format: one `i j` pair per line,
    /// `#` starts a comment, blank lines are ignored. The node count is
    /// inferred as `1 + max id`, so ids that never appear as endpoints of an
    /// edge below the maximum become isolated nodes.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut raw: Vec<(usize, usize)> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = match line.find('#') {
                Some(pos) => &line[..pos],
                None => line,
            };
            let content = content.trim();
            if content.is_empty() {
                continue;
            }
            let toks: Vec<&str> = content.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(GraphError::Malformed {
                    line: line_no,
                    found: content.to_string(),
                });
            }
            let parse = |tok: &str| -> Result<usize, GraphError> {
                tok.parse::<usize>().map_err(|_| GraphError::Malformed {
                    line: line_no,
                    found: content.to_string(),
                })
            };
            let a = parse(toks[0])?;
            let b = parse(toks[1])?;
            if a == b {
                return Err(GraphError::SelfLoop {
                    line: line_no,
                    node: a,
                });
            }
            raw.push((a, b));
        }
        if raw.is_empty() {
            return Err(GraphError::EmptyEdgeList);
        }
        let n = 1 + raw.iter().map(|&(a, b)| a.max(b)).max().unwrap();
        Graph::from_edges(n, raw)
    }

    /// Cycle over `0..n`: edges `{k, k+1}` plus the closing edge `{0, n-1}`.
    pub fn ring(n: usize) -> Result<Self, GraphError> {
        if n < 3 {
            return Err(GraphError::TooSmall {
                what: "ring",
                min: 3,
                n,
            });
        }
        let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|k| (k, k + 1)).collect();
        edges.push((0, n - 1));
        Graph::from_edges(n, edges)
    }

    /// Path over `0..n`: edges `{k, k+1}`.
    pub fn path(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooSmall {
                what: "path",
                min: 2,
                n,
            });
        }
        Graph::from_edges(n, (0..n - 1).map(|k| (k, k + 1)))
    }

    /// Complete graph on `n` nodes.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooSmall {
                what: "complete graph",
                min: 2,
                n,
            });
        }
        let mut edges = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Graph::from_edges(n, edges)
    }

    /// G(n, p) sample, retried until connected (same RNG stream continues
    /// across attempts, so the result is a deterministic function of the
    /// seed). Fails after [`ER_CONNECTIVITY_ATTEMPTS`] unsuccessful samples.
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooSmall {
                what: "random graph",
                min: 2,
                n,
            });
        }
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(GraphError::BadProbability { p });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..ER_CONNECTIVITY_ATTEMPTS {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random::<f64>() < p {
                        edges.push((i, j));
                    }
                }
            }
            let g = Graph::from_edges(n, edges)?;
            if g.is_connected() {
                return Ok(g);
            }
        }
        Err(GraphError::ConnectivityExhausted {
            attempts: ER_CONNECTIVITY_ATTEMPTS,
            n,
            p,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of edges.
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// Maximum degree; 0 for an edgeless graph.
    pub fn d_max(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    pub fn isolated_nodes(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.degree(i) == 0).collect()
    }

    /// Breadth-first connectivity test. A single node counts as connected.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &j in &self.neighbors[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == self.n
    }

    /// Dense Laplacian `L = D - A`, mostly useful as a test oracle.
    pub fn laplacian_dense(&self) -> Vec<Vec<f64>> {
        let mut l = vec![vec![0.0; self.n]; self.n];
        for &(i, j) in &self.edges {
            l[i][i] += 1.0;
            l[j][j] += 1.0;
            l[i][j] -= 1.0;
            l[j][i] -= 1.0;
        }
        l
    }

    /// Edge-sum form of the Laplacian quadratic: `Σ_{{i,j}∈E} (x_i - x_j)²`.
    ///
    /// Note this is `x'Lx`, i.e. *twice* the disagreement function `½ x'Lx`.
    pub fn laplacian_quadratic(&self, x: &[f64]) -> Result<f64, GraphError> {
        if x.len() != self.n {
            return Err(GraphError::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self
            .edges
            .iter()
            .map(|&(i, j)| {
                let d = x[i] - x[j];
                d * d
            })
            .sum())
    }
}
