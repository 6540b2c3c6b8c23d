//! Simple undirected graphs, corpora and degree-based node measures.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Matrix, Result};

/// A finite simple undirected graph stored as sorted neighbor lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
    edge_count: usize,
    label: Option<i64>,
}

/// What was discarded while building a [`Graph`] from raw edges.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeStats {
    pub duplicates: usize,
    pub self_loops: usize,
}

impl EdgeStats {
    pub fn dropped(&self) -> usize {
        self.duplicates + self.self_loops
    }
}

impl Graph {
    /// Builds a graph on `node_count` nodes. Self-loops and repeated edges
    /// (in either direction) are dropped and counted.
    pub fn from_edges(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<(Self, EdgeStats)> {
        if node_count == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut neighbors = vec![Vec::new(); node_count];
        let mut stats = EdgeStats::default();
        let mut raw = 0usize;
        for (u, v) in edges {
            for id in [u, v] {
                if id >= node_count {
                    return Err(Error::NodeOutOfRange { id, node_count });
                }
            }
            if u == v {
                stats.self_loops += 1;
                continue;
            }
            raw += 1;
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        let mut endpoints = 0;
        for list in neighbors.iter_mut() {
            list.sort_unstable();
            list.dedup();
            endpoints += list.len();
        }
        let edge_count = endpoints / 2;
        stats.duplicates = raw - edge_count;
        Ok((Self { neighbors, edge_count, label: None }, stats))
    }

    /// Graph with no edges.
    pub fn empty(node_count: usize) -> Result<Self> {
        Self::from_edges(node_count, core::iter::empty()).map(|(g, _)| g)
    }

    pub fn complete(node_count: usize) -> Result<Self> {
        let edges = (0..node_count).flat_map(|u| (u + 1..node_count).map(move |v| (u, v)));
        Self::from_edges(node_count, edges).map(|(g, _)| g)
    }

    pub fn path(node_count: usize) -> Result<Self> {
        Self::from_edges(node_count, (1..node_count).map(|v| (v - 1, v))).map(|(g, _)| g)
    }

    pub fn cycle(node_count: usize) -> Result<Self> {
        let edges = (0..node_count).map(|v| (v, (v + 1) % node_count));
        Self::from_edges(node_count, edges).map(|(g, _)| g)
    }

    /// Star with the hub at `center`.
    pub fn star(node_count: usize, center: usize) -> Result<Self> {
        let edges = (0..node_count).filter(|&v| v != center).map(|v| (center, v));
        Self::from_edges(node_count, edges).map(|(g, _)| g)
    }

    pub fn with_label(mut self, label: Option<i64>) -> Self {
        self.label = label;
        self
    }

    pub fn node_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn label(&self) -> Option<i64> {
        self.label
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().copied().filter(move |&v| v > u).map(move |v| (u, v)))
    }

    /// Edge density `2m / (n(n-1))`; zero for a single node.
    pub fn density(&self) -> f64 {
        let n = self.node_count();
        if n < 2 {
            return 0.0;
        }
        2.0 * self.edge_count as f64 / (n as f64 * (n as f64 - 1.0))
    }

    pub fn adjacency(&self) -> Matrix {
        let n = self.node_count();
        let mut a = Matrix::zeros(n, n);
        for (u, v) in self.edges() {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        a
    }

    /// Relabel nodes so that new node `i` is old node `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.node_count();
        if order.len() != n {
            return Err(Error::Dimension(alloc::format!(
                "permutation of length {} for {n} nodes",
                order.len()
            )));
        }
        let mut inverse = vec![usize::MAX; n];
        for (new, &old) in order.iter().enumerate() {
            if old >= n || inverse[old] != usize::MAX {
                return Err(Error::Dimension("not a permutation".into()));
            }
            inverse[old] = new;
        }
        let edges = self.edges().map(|(u, v)| (inverse[u], inverse[v]));
        Graph::from_edges(n, edges).map(|(g, _)| g.with_label(self.label))
    }
}

/// An ordered, nonempty collection of graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphCorpus {
    name: String,
    graphs: Vec<Graph>,
}

impl GraphCorpus {
    pub fn new(name: impl Into<String>, graphs: Vec<Graph>) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(Self { name: name.into(), graphs })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Graph> {
        self.graphs.iter()
    }

    pub fn into_graphs(self) -> Vec<Graph> {
        self.graphs
    }
}

impl<'a> IntoIterator for &'a GraphCorpus {
    type Item = &'a Graph;
    type IntoIter = core::slice::Iter<'a, Graph>;

    fn into_iter(self) -> Self::IntoIter {
        self.graphs.iter()
    }
}

const MEASURE_TOL: f64 = 1e-9;

/// A probability vector over nodes (or graphon blocks).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<f64>", into = "Vec<f64>"))]
pub struct NodeMeasure(Vec<f64>);

impl NodeMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("no weights".into()));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidMeasure(alloc::format!("weight {i} is {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MEASURE_TOL {
            return Err(Error::InvalidMeasure(alloc::format!("weights sum to {total}")));
        }
        Ok(Self(weights))
    }

    /// Scales nonnegative weights to unit mass.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidMeasure(alloc::format!("total mass {total}")));
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
        Self::new(weights)
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidMeasure("no weights".into()));
        }
        Ok(Self(vec![1.0 / len as f64; len]))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.0.len() as f64;
        self.0.iter().all(|w| (w - u).abs() <= 1e-12)
    }
}

impl TryFrom<Vec<f64>> for NodeMeasure {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<NodeMeasure> for Vec<f64> {
    fn from(m: NodeMeasure) -> Self {
        m.0
    }
}

/// Normalized degrees `deg_i / 2m`, or `None` when the graph has no edges.
pub fn try_degree_measure(g: &Graph) -> Option<NodeMeasure> {
    if g.edge_count() == 0 {
        return None;
    }
    let total = 2.0 * g.edge_count() as f64;
    Some(NodeMeasure(g.degrees().into_iter().map(|d| d as f64 / total).collect()))
}

/// Normalized degrees; edgeless graphs fall back to the uniform measure.
pub fn degree_measure(g: &Graph) -> NodeMeasure {
    try_degree_measure(g).unwrap_or_else(|| {
        log::warn!("edgeless graph on {} nodes: using uniform node measure", g.node_count());
        NodeMeasure(vec![1.0 / g.node_count() as f64; g.node_count()])
    })
}

/// Erdős–Rényi graph: every unordered pair is an edge independently with probability `p`.
pub fn generate_er(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(alloc::format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).map(|(g, _)| g)
}
