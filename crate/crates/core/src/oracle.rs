//! Corpus-level graphon estimation by structured Gromov-Wasserstein barycenters.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graphon::interp1d;
use crate::{degree_measure, par, solve_gw_from, Error, GraphCorpus, GwConfig, Matrix, NodeMeasure, Result, StepGraphon};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct OracleConfig {
    /// Number of blocks `D` of the estimated graphon.
    pub oracle_size: usize,
    pub gw: GwConfig,
    pub barycenter_iters: usize,
    pub seed: u64,
    /// Start each graph's solve from its plan of the previous sweep.
    pub warm_start: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        // Warm starts carry solver progress across sweeps, so each sweep needs
        // far fewer outer steps than a cold solve.
        let gw = GwConfig { outer_iters: 20, ..GwConfig::default() };
        Self { oracle_size: 100, gw, barycenter_iters: 10, seed: 0, warm_start: true }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.oracle_size < 2 {
            return Err(Error::Config(alloc::format!("oracle size must be at least 2, got {}", self.oracle_size)));
        }
        self.gw.validate()
    }
}

/// Pools every graph's normalized degrees, sorts them in descending order,
/// interpolates onto `d` cells and renormalizes.
pub fn merged_measure(corpus: &GraphCorpus, d: usize) -> Result<NodeMeasure> {
    if d == 0 {
        return Err(Error::Config("measure size must be positive".into()));
    }
    let mut pooled: Vec<f64> = corpus.iter().flat_map(|g| degree_measure(g).weights().to_vec()).collect();
    pooled.sort_by(|a, b| b.total_cmp(a));
    NodeMeasure::normalized(interp1d(&pooled, d))
}

/// Alternates per-graph transport solves against the current estimate with
/// the barycenter update `W ← (1/N) Σ_n (T_nᵀ A_n T_n) ⊘ (μ_W μ_Wᵀ)`,
/// symmetrizing and clipping to `[0, 1]` after every sweep.
pub fn estimate_oracle(corpus: &GraphCorpus, cfg: &OracleConfig) -> Result<StepGraphon> {
    cfg.validate()?;
    let d = cfg.oracle_size;
    let measure = merged_measure(corpus, d)?;
    if let Some(k) = measure.weights().iter().position(|&w| w == 0.0) {
        return Err(Error::ZeroMass(k));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut values = Matrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = rng.random::<f64>();
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    let mut estimate = StepGraphon::new(values, measure.clone())?;

    let inputs: Vec<(Matrix, NodeMeasure)> = corpus.iter().map(|g| (g.adjacency(), degree_measure(g))).collect();
    let mass = Matrix::outer(measure.weights(), measure.weights());
    let scale = 1.0 / corpus.len() as f64;

    let mut plans: Vec<Option<Matrix>> = alloc::vec![None; inputs.len()];
    for sweep in 0..cfg.barycenter_iters {
        let current = &estimate;
        let jobs: Vec<_> = inputs.iter().zip(&plans).collect();
        let aligned = par::map(&jobs, |((a, mu), prev)| -> Result<(Matrix, Matrix)> {
            let init = if cfg.warm_start { prev.as_ref() } else { None };
            let sol = solve_gw_from(a, mu, current.values(), current.measure(), init, &cfg.gw)?;
            let t = sol.plan.into_matrix();
            Ok((t.t_matmul(&a.matmul(&t)?)?, t))
        });
        let mut sum = Matrix::zeros(d, d);
        for (slot, item) in plans.iter_mut().zip(aligned) {
            let (block, t) = item?;
            sum.add_scaled(&block, scale);
            *slot = Some(t);
        }
        let mut next = sum.zip_map(&mass, |s, m| (s / m).clamp(0.0, 1.0));
        next.symmetrize();
        if !next.is_finite() {
            return Err(Error::NonFinite("barycenter update".into()));
        }
        estimate = StepGraphon::new(next, measure.clone())?;
        log::debug!("barycenter sweep {} of {} done", sweep + 1, cfg.barycenter_iters);
    }
    Ok(estimate)
}
