//! Step-function graphons: construction, resampling, empirical extraction and
//! latent-position sampling.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Graph, Matrix, NodeMeasure, Result};

/// A symmetric `D×D` grid of edge probabilities with a probability measure
/// over the `D` blocks.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "repr::StepGraphonRepr", into = "repr::StepGraphonRepr"))]
pub struct StepGraphon {
    values: Matrix,
    measure: NodeMeasure,
}

impl StepGraphon {
    /// Validates range and measure; the value grid is symmetrized as `(V + Vᵀ) / 2`.
    pub fn new(mut values: Matrix, measure: NodeMeasure) -> Result<Self> {
        if !values.is_square() || values.rows() == 0 {
            return Err(Error::Dimension(alloc::format!(
                "graphon grid must be square and nonempty, got {}x{}",
                values.rows(),
                values.cols()
            )));
        }
        if measure.len() != values.rows() {
            return Err(Error::Dimension(alloc::format!(
                "measure of length {} for a {}-block graphon",
                measure.len(),
                values.rows()
            )));
        }
        let d = values.rows();
        for i in 0..d {
            for j in 0..d {
                let v = values[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::OutOfRange { row: i, col: j, value: v });
                }
            }
        }
        if values.max_asymmetry() > 1e-12 {
            log::debug!("symmetrizing graphon grid (asymmetry {:e})", values.max_asymmetry());
        }
        values.symmetrize();
        Ok(Self { values, measure })
    }

    pub fn constant(size: usize, p: f64) -> Result<Self> {
        uniform_step_graphon(Matrix::filled(size, size, p))
    }

    pub fn size(&self) -> usize {
        self.values.rows()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn measure(&self) -> &NodeMeasure {
        &self.measure
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn with_measure(self, measure: NodeMeasure) -> Result<Self> {
        Self::new(self.values, measure)
    }

    /// Block containing latent position `x ∈ [0, 1]`: half-open intervals of
    /// the cumulative measure, with `x = 1` in the last block.
    pub fn block_of(&self, x: f64) -> usize {
        let d = self.size();
        if self.measure.is_uniform() {
            return ((x * d as f64) as usize).min(d - 1);
        }
        let mut acc = 0.0;
        for (k, w) in self.measure.weights().iter().enumerate() {
            acc += w;
            if x < acc {
                return k;
            }
        }
        d - 1
    }
}

/// Step graphon with the uniform block measure `1/D`.
pub fn uniform_step_graphon(values: Matrix) -> Result<StepGraphon> {
    let d = values.rows();
    let measure = NodeMeasure::uniform(d.max(1))?;
    StepGraphon::new(values, measure)
}

/// Cell-centred linear interpolation weights: target cell `k` of `m` sits at
/// `(k + 0.5) / m`, source cell `i` of `n` at `(i + 0.5) / n`; coordinates
/// beyond the outer centres clamp to the end cells.
fn axis_weights(n: usize, m: usize) -> Vec<(usize, usize, f64)> {
    (0..m)
        .map(|k| {
            let x = (k as f64 + 0.5) / m as f64;
            let u = (x * n as f64 - 0.5).clamp(0.0, (n - 1) as f64);
            let i0 = (u as usize).min(n - 1);
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, u - i0 as f64)
        })
        .collect()
}

/// Linear interpolation of `v` onto `m` cell centres.
pub fn interp1d(v: &[f64], m: usize) -> Vec<f64> {
    if v.is_empty() {
        return alloc::vec![0.0; m];
    }
    axis_weights(v.len(), m)
        .into_iter()
        .map(|(i0, i1, t)| (1.0 - t) * v[i0] + t * v[i1])
        .collect()
}

fn bilinear(n: usize, m: usize, lookup: impl Fn(usize, usize) -> f64) -> Matrix {
    let w = axis_weights(n, m);
    let mut out = Matrix::zeros(m, m);
    for a in 0..m {
        let (i0, i1, s) = w[a];
        for b in a..m {
            let (j0, j1, t) = w[b];
            let v = (1.0 - s) * ((1.0 - t) * lookup(i0, j0) + t * lookup(i0, j1))
                + s * ((1.0 - t) * lookup(i1, j0) + t * lookup(i1, j1));
            let v = v.clamp(0.0, 1.0);
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    out
}

/// Bilinear resampling of the value grid to `m×m`; the measure resets to uniform.
pub fn resample(w: &StepGraphon, m: usize) -> Result<StepGraphon> {
    if m == 0 {
        return Err(Error::Config("resample target size must be positive".into()));
    }
    let values = bilinear(w.size(), m, |i, j| w.values[(i, j)]);
    uniform_step_graphon(values)
}

/// Stable descending-degree order: `order[i]` is the old index of new node `i`.
pub fn degree_order(g: &Graph) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.node_count()).collect();
    order.sort_by(|&a, &b| g.degree(b).cmp(&g.degree(a)));
    order
}

/// Relabels nodes so degrees are non-increasing; ties keep their original order.
pub fn sort_by_degree(g: &Graph) -> Graph {
    g.permuted(&degree_order(g)).expect("degree order is a permutation")
}

/// Degree-sort the graph and resample its 0/1 adjacency grid to `d×d`.
pub fn empirical_graphon(g: &Graph, d: usize) -> Result<StepGraphon> {
    if d == 0 {
        return Err(Error::Config("graphon size must be positive".into()));
    }
    let order = degree_order(g);
    let values = bilinear(g.node_count(), d, |i, j| {
        if g.has_edge(order[i], order[j]) {
            1.0
        } else {
            0.0
        }
    });
    uniform_step_graphon(values)
}

/// Draws `n` latent positions uniformly on `[0, 1)` and connects each pair
/// independently with the probability of their blocks.
pub fn sample_graph(w: &StepGraphon, n: usize, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<usize> = (0..n).map(|_| w.block_of(rng.random::<f64>())).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < w.values[(blocks[u], blocks[v])] {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).map(|(g, _)| g)
}

#[cfg(feature = "serde")]
mod repr {
    use alloc::vec::Vec;

    use super::StepGraphon;
    use crate::{Error, Matrix, NodeMeasure};

    /// On-disk shape: `{size, measure, values}` with row-major values.
    #[derive(serde::Serialize, serde::Deserialize)]
    pub(super) struct StepGraphonRepr {
        size: usize,
        measure: Vec<f64>,
        values: Vec<f64>,
    }

    impl TryFrom<StepGraphonRepr> for StepGraphon {
        type Error = Error;

        fn try_from(r: StepGraphonRepr) -> Result<Self, Error> {
            let values = Matrix::from_row_major(r.size, r.size, r.values)?;
            StepGraphon::new(values, NodeMeasure::new(r.measure)?)
        }
    }

    impl From<StepGraphon> for StepGraphonRepr {
        fn from(w: StepGraphon) -> Self {
            Self { size: w.size(), measure: w.measure.into(), values: w.values.into_vec() }
        }
    }
}
