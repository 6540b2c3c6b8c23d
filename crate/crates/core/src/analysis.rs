//! Homomorphism densities, the exact cut norm of step functions, the counting
//! lemma check and corpus statistics.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{resample, Error, Graph, GraphCorpus, Matrix, NodeMeasure, Result, StepGraphon};

/// Largest motif accepted.
pub const MAX_MOTIF_NODES: usize = 6;
/// Enumeration budget for homomorphism counting.
pub const MAX_ENUMERATION: u128 = 1_000_000_000;
/// Largest step function whose cut norm is computed exactly.
pub const MAX_CUT_NORM_SIZE: usize = 25;

const COUNTING_SLACK: f64 = 1e-9;

/// A small connected simple graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Motif {
    name: String,
    graph: Graph,
    /// Vertices in an order where each one after the first has an earlier
    /// neighbour.
    order: Vec<usize>,
}

impl Motif {
    pub fn new(name: impl Into<String>, graph: Graph) -> Result<Self> {
        let n = graph.node_count();
        if n == 0 || n > MAX_MOTIF_NODES {
            return Err(Error::Motif(alloc::format!("motifs need 1 to {MAX_MOTIF_NODES} nodes, got {n}")));
        }
        let mut order = vec![0];
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut head = 0;
        while head < order.len() {
            for &v in graph.neighbors(order[head]) {
                if !seen[v] {
                    seen[v] = true;
                    order.push(v);
                }
            }
            head += 1;
        }
        if order.len() != n {
            return Err(Error::Motif("motif must be connected".into()));
        }
        Ok(Self { name: name.into(), graph, order })
    }

    pub fn k2() -> Self {
        Self::new("K2", Graph::complete(2).expect("valid")).expect("valid motif")
    }

    /// Path on three nodes.
    pub fn p3() -> Self {
        Self::new("P3", Graph::path(3).expect("valid")).expect("valid motif")
    }

    pub fn k3() -> Self {
        Self::new("K3", Graph::complete(3).expect("valid")).expect("valid motif")
    }

    pub fn c4() -> Self {
        Self::new("C4", Graph::cycle(4).expect("valid")).expect("valid motif")
    }

    pub fn k4() -> Self {
        Self::new("K4", Graph::complete(4).expect("valid")).expect("valid motif")
    }

    /// K2, P3, K3, C4 and K4.
    pub fn standard_set() -> Vec<Self> {
        vec![Self::k2(), Self::p3(), Self::k3(), Self::c4(), Self::k4()]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// Neighbours of `order[pos]` placed earlier in `order`, as positions.
    fn back_edges(&self) -> Vec<Vec<usize>> {
        let mut position = vec![0; self.node_count()];
        for (p, &v) in self.order.iter().enumerate() {
            position[v] = p;
        }
        self.order
            .iter()
            .enumerate()
            .map(|(p, &v)| self.graph.neighbors(v).iter().map(|&u| position[u]).filter(|&q| q < p).collect())
            .collect()
    }
}

fn check_budget(targets: usize, motif: &Motif) -> Result<()> {
    let count = (targets as u128).checked_pow(motif.node_count() as u32).unwrap_or(u128::MAX);
    if count > MAX_ENUMERATION {
        return Err(Error::TooLarge { count });
    }
    Ok(())
}

/// `hom(F, G) / |V_G|^{|V_F|}` by exhaustive search over vertex maps.
pub fn hom_density_graph(motif: &Motif, g: &Graph) -> Result<f64> {
    check_budget(g.node_count(), motif)?;
    let n = g.node_count();
    if n == 0 {
        return Ok(0.0);
    }
    let back = motif.back_edges();
    let mut image = vec![0usize; motif.node_count()];
    let count = extend_graph(g, &back, &mut image, 0);
    Ok(count as f64 / libm::pow(n as f64, motif.node_count() as f64))
}

fn extend_graph(g: &Graph, back: &[Vec<usize>], image: &mut [usize], pos: usize) -> u64 {
    if pos == back.len() {
        return 1;
    }
    let fits = |v: usize, image: &[usize]| back[pos].iter().all(|&q| g.has_edge(image[q], v));
    let mut total = 0;
    match back[pos].first() {
        // Motifs are connected, so only the root lacks an earlier neighbour.
        None => {
            for v in 0..g.node_count() {
                image[pos] = v;
                total += extend_graph(g, back, image, pos + 1);
            }
        }
        Some(&anchor) => {
            for &v in g.neighbors(image[anchor]) {
                if fits(v, image) {
                    image[pos] = v;
                    total += extend_graph(g, back, image, pos + 1);
                }
            }
        }
    }
    total
}

/// `∫ Π_{uv ∈ E(F)} W(x_u, x_v) dx` evaluated exactly over block assignments.
pub fn hom_density_graphon(motif: &Motif, w: &StepGraphon) -> Result<f64> {
    check_budget(w.size(), motif)?;
    let back = motif.back_edges();
    let mut image = vec![0usize; motif.node_count()];
    Ok(extend_graphon(w, &back, &mut image, 0, 1.0))
}

fn extend_graphon(w: &StepGraphon, back: &[Vec<usize>], image: &mut [usize], pos: usize, acc: f64) -> f64 {
    if pos == back.len() {
        return acc;
    }
    let mut total = 0.0;
    for (b, &mass) in w.measure().weights().iter().enumerate() {
        let mut factor = mass;
        for &q in &back[pos] {
            factor *= w.value(image[q], b);
        }
        if factor != 0.0 {
            image[pos] = b;
            total += extend_graphon(w, back, image, pos + 1, acc * factor);
        }
    }
    total
}

/// `sup_{S,T} |Σ_{i∈S, j∈T} μ_i Δ_ij μ_j|` over block subsets.
///
/// The objective is bilinear in the per-block inclusion fractions, so the
/// supremum sits at a vertex. For each row subset `S` (walked in Gray-code
/// order) the best column set takes every column with positive or, for the
/// negative side, negative weighted sum.
pub fn cut_norm(delta: &Matrix, measure: &NodeMeasure) -> Result<f64> {
    let d = delta.rows();
    if !delta.is_square() || measure.len() != d {
        return Err(Error::Dimension(alloc::format!(
            "{}x{} step function with a measure of length {}",
            delta.rows(),
            delta.cols(),
            measure.len()
        )));
    }
    if d > MAX_CUT_NORM_SIZE {
        return Err(Error::TooLarge { count: 1u128 << d });
    }
    let mu = measure.weights();
    let weighted = Matrix::from_fn(d, d, |i, j| mu[i] * delta[(i, j)] * mu[j]);
    let mut col = vec![0.0; d];
    let mut best: f64 = 0.0;
    for step in 1u64..(1u64 << d) {
        // Gray code: exactly one row enters or leaves per step.
        let row = step.trailing_zeros() as usize;
        let gray = step ^ (step >> 1);
        let sign = if gray >> row & 1 == 1 { 1.0 } else { -1.0 };
        for (c, &v) in col.iter_mut().zip(weighted.row(row)) {
            *c += sign * v;
        }
        let (pos, neg) = col.iter().fold((0.0, 0.0), |(p, n), &c| if c > 0.0 { (p + c, n) } else { (p, n - c) });
        best = best.max(pos).max(neg);
    }
    Ok(best)
}

/// Cut norm of `w1 - w2`; both must share size and measure.
pub fn cut_distance(w1: &StepGraphon, w2: &StepGraphon) -> Result<f64> {
    same_grid(w1, w2)?;
    cut_norm(&w1.values().zip_map(w2.values(), |a, b| a - b), w1.measure())
}

fn same_grid(w1: &StepGraphon, w2: &StepGraphon) -> Result<()> {
    if w1.size() != w2.size() {
        return Err(Error::Dimension(alloc::format!("graphon sizes {} and {} differ", w1.size(), w2.size())));
    }
    let apart = w1.measure().weights().iter().zip(w2.measure().weights()).any(|(a, b)| (a - b).abs() > 1e-12);
    if apart {
        return Err(Error::InvalidMeasure("graphons must share one block measure".into()));
    }
    Ok(())
}

/// Which size of the motif multiplies the cut distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MotifFactor {
    #[default]
    Edges,
    Nodes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingCheck {
    /// `|t(F, W1) - t(F, W2)|`.
    pub lhs: f64,
    /// Factor times the cut distance.
    pub rhs: f64,
    pub holds: bool,
}

pub fn counting_lemma_check(motif: &Motif, w1: &StepGraphon, w2: &StepGraphon) -> Result<CountingCheck> {
    counting_lemma_check_with(motif, w1, w2, MotifFactor::Edges)
}

pub fn counting_lemma_check_with(
    motif: &Motif,
    w1: &StepGraphon,
    w2: &StepGraphon,
    factor: MotifFactor,
) -> Result<CountingCheck> {
    let cut = cut_distance(w1, w2)?;
    let lhs = (hom_density_graphon(motif, w1)? - hom_density_graphon(motif, w2)?).abs();
    let k = match factor {
        MotifFactor::Edges => motif.edge_count(),
        MotifFactor::Nodes => motif.node_count(),
    };
    let rhs = k as f64 * cut;
    Ok(CountingCheck { lhs, rhs, holds: lhs <= rhs + COUNTING_SLACK })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotifGap {
    pub motif: String,
    pub check: CountingCheck,
}

/// Counting-lemma report over [`Motif::standard_set`]. Graphons on different
/// grids are first resampled to the larger size on a uniform measure.
pub fn motif_gaps(oracle: &StepGraphon, predicted: &StepGraphon) -> Result<Vec<MotifGap>> {
    motif_gaps_with(oracle, predicted, MotifFactor::Edges)
}

pub fn motif_gaps_with(oracle: &StepGraphon, predicted: &StepGraphon, factor: MotifFactor) -> Result<Vec<MotifGap>> {
    let (a, b) = if same_grid(oracle, predicted).is_ok() {
        (oracle.clone(), predicted.clone())
    } else {
        let size = oracle.size().max(predicted.size());
        (resample(oracle, size)?, resample(predicted, size)?)
    };
    Motif::standard_set()
        .into_iter()
        .map(|m| {
            let check = counting_lemma_check_with(&m, &a, &b, factor)?;
            Ok(MotifGap { motif: m.name, check })
        })
        .collect()
}

/// Corpus means of per-graph statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorpusStats {
    pub graphs: usize,
    pub mean_nodes: f64,
    pub mean_edges: f64,
    pub density: f64,
    /// Three times the triangle count over the number of connected triples.
    pub transitivity: f64,
    pub average_degree: f64,
    /// Mean local clustering, counting nodes of degree below two as zero.
    pub average_clustering: f64,
}

pub fn graph_statistics(corpus: &GraphCorpus) -> CorpusStats {
    let scale = 1.0 / corpus.len() as f64;
    let mut s = CorpusStats {
        graphs: corpus.len(),
        mean_nodes: 0.0,
        mean_edges: 0.0,
        density: 0.0,
        transitivity: 0.0,
        average_degree: 0.0,
        average_clustering: 0.0,
    };
    for g in corpus.iter() {
        let n = g.node_count();
        let triangles_at: Vec<usize> = (0..n).map(|v| triangles_at(g, v)).collect();
        let triangles_x3: usize = triangles_at.iter().sum();
        let triples: usize = (0..n).map(|v| pairs(g.degree(v))).sum();
        let clustering: f64 = (0..n)
            .map(|v| if g.degree(v) < 2 { 0.0 } else { triangles_at[v] as f64 / pairs(g.degree(v)) as f64 })
            .sum();
        s.mean_nodes += scale * n as f64;
        s.mean_edges += scale * g.edge_count() as f64;
        s.density += scale * g.density();
        if triples > 0 {
            s.transitivity += scale * triangles_x3 as f64 / triples as f64;
        }
        if n > 0 {
            s.average_degree += scale * 2.0 * g.edge_count() as f64 / n as f64;
            s.average_clustering += scale * clustering / n as f64;
        }
    }
    s
}

fn pairs(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

/// Triangles containing `v`.
fn triangles_at(g: &Graph, v: usize) -> usize {
    let nb = g.neighbors(v);
    let mut count = 0;
    for (a, &x) in nb.iter().enumerate() {
        for &y in &nb[a + 1..] {
            if g.has_edge(x, y) {
                count += 1;
            }
        }
    }
    count
}
