//! Learnable graphon bases, the coefficient encoder and the fixed-plan
//! reconstruction loss.
//!
//! Each basis is `B_k = σ(L_k)` for a symmetric logit matrix `L_k`. Only the
//! upper triangle of `L_k` is a free parameter, so the logit gradients returned
//! here are gradients with respect to those free entries, mirrored into a
//! symmetric matrix. Off-diagonal entries therefore carry both `(i, j)` and
//! `(j, i)` contributions.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::try_degree_measure;
use crate::gw::gw_cost_matrix;
use crate::math::{logit, sigmoid, softmax};
use crate::{
    empirical_graphon, par, solve_gw, sort_by_degree, Error, Graph, GraphCorpus, GwConfig, Matrix, NodeMeasure,
    Result, StepGraphon,
};

/// Values are clamped to `[INIT_CLAMP, 1 - INIT_CLAMP]` before taking logits.
pub const INIT_CLAMP: f64 = 0.05;

const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BasisSet {
    size: usize,
    logits: Vec<Matrix>,
}

impl BasisSet {
    pub fn new(logits: Vec<Matrix>) -> Result<Self> {
        let size = logits.first().ok_or_else(|| Error::Config("a basis set needs at least one basis".into()))?.rows();
        if size == 0 {
            return Err(Error::Config("basis size must be positive".into()));
        }
        for (k, l) in logits.iter().enumerate() {
            if l.rows() != size || l.cols() != size {
                return Err(Error::Dimension(alloc::format!(
                    "basis {k} is {}x{}, expected {size}x{size}",
                    l.rows(),
                    l.cols()
                )));
            }
            if !l.is_finite() {
                return Err(Error::NonFinite(alloc::format!("logits of basis {k}")));
            }
            if l.max_asymmetry() > 1e-12 {
                return Err(Error::Asymmetric("basis logits"));
            }
        }
        Ok(Self { size, logits })
    }

    /// Inverts `σ` on graphon values clamped to `[INIT_CLAMP, 1 - INIT_CLAMP]`.
    pub fn from_values(values: &[Matrix]) -> Result<Self> {
        Self::new(values.iter().map(|v| v.map(|x| logit(x.clamp(INIT_CLAMP, 1.0 - INIT_CLAMP)))).collect())
    }

    /// Like [`BasisSet::from_values`] but only clamps away from exact 0 and 1,
    /// for reloading bases that were saved as graphon values.
    pub fn from_graphons(bases: &[StepGraphon]) -> Result<Self> {
        let eps = 1e-12;
        Self::new(bases.iter().map(|b| b.values().map(|x| logit(x.clamp(eps, 1.0 - eps)))).collect())
    }

    pub fn count(&self) -> usize {
        self.logits.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn logits(&self) -> &[Matrix] {
        &self.logits
    }

    /// `σ(L_k)`.
    pub fn basis(&self, k: usize) -> Matrix {
        self.logits[k].map(sigmoid)
    }

    pub fn graphons(&self) -> Result<Vec<StepGraphon>> {
        let m = NodeMeasure::uniform(self.size)?;
        (0..self.count()).map(|k| StepGraphon::new(self.basis(k), m.clone())).collect()
    }

    /// Free parameters: the upper triangle including the diagonal.
    pub fn parameter_count(&self) -> usize {
        self.count() * self.size * (self.size + 1) / 2
    }

    pub(crate) fn step(&mut self, grads: &[Matrix], lr: f64) {
        for (l, g) in self.logits.iter_mut().zip(grads) {
            l.add_scaled(g, -lr);
        }
    }
}

/// Draws each basis from the empirical graphon of a uniformly chosen,
/// degree-sorted corpus graph.
pub fn init_bases(corpus: &GraphCorpus, count: usize, size: usize, seed: u64) -> Result<BasisSet> {
    if count == 0 {
        return Err(Error::Config("basis count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..count)
        .map(|_| {
            let g = &corpus.graphs()[rng.random_range(0..corpus.len())];
            empirical_graphon(&sort_by_degree(g), size).map(|w| w.values().clone())
        })
        .collect::<Result<Vec<_>>>()?;
    BasisSet::from_values(&values)
}

/// `α = softmax(W f + b)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoefficientEncoder {
    weight: Matrix,
    bias: Vec<f64>,
}

impl CoefficientEncoder {
    pub fn zeros(count: usize, feature_dim: usize) -> Self {
        Self { weight: Matrix::zeros(count, feature_dim), bias: vec![0.0; count] }
    }

    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        if weight.rows() != bias.len() || bias.is_empty() {
            return Err(Error::Dimension(alloc::format!(
                "encoder weight has {} rows but bias has {} entries",
                weight.rows(),
                bias.len()
            )));
        }
        if !weight.is_finite() || bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("encoder parameters".into()));
        }
        Ok(Self { weight, bias })
    }

    pub fn count(&self) -> usize {
        self.bias.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn parameter_count(&self) -> usize {
        self.count() * self.feature_dim() + self.count()
    }

    pub fn encode(&self, features: &[f64]) -> Vec<f64> {
        debug_assert_eq!(features.len(), self.feature_dim());
        let mut z = self.weight.mat_vec(features);
        for (v, b) in z.iter_mut().zip(&self.bias) {
            *v += b;
        }
        softmax(&mut z);
        z
    }

    pub(crate) fn step(&mut self, weight: &Matrix, bias: &[f64], lr: f64) {
        self.weight.add_scaled(weight, -lr);
        for (b, g) in self.bias.iter_mut().zip(bias) {
            *b -= lr * g;
        }
    }
}

/// Edge density, mean normalized degree, then a histogram of normalized
/// degrees over `dim - 2` equal-width bins of `[0, 1]` as node fractions.
/// Edgeless graphs use the uniform node measure.
pub fn structural_features(g: &Graph, dim: usize) -> Result<Vec<f64>> {
    if dim < 3 {
        return Err(Error::Config(alloc::format!("feature dimension must be at least 3, got {dim}")));
    }
    let n = g.node_count();
    let mut out = vec![0.0; dim];
    if n == 0 {
        return Ok(out);
    }
    let measure = match try_degree_measure(g) {
        Some(m) => m,
        None => NodeMeasure::uniform(n)?,
    };
    let w = measure.weights();
    out[0] = g.density();
    out[1] = w.iter().sum::<f64>() / n as f64;
    let bins = dim - 2;
    for &v in w {
        let b = ((v * bins as f64) as usize).min(bins - 1);
        out[2 + b] += 1.0 / n as f64;
    }
    Ok(out)
}

pub fn encode_coefficients(enc: &CoefficientEncoder, g: &Graph) -> Result<Vec<f64>> {
    Ok(enc.encode(&structural_features(g, enc.feature_dim())?))
}

fn check_simplex(alpha: &[f64], count: usize) -> Result<()> {
    if alpha.len() != count {
        return Err(Error::Dimension(alloc::format!("{} coefficients for {count} bases", alpha.len())));
    }
    if alpha.iter().any(|&a| !(a >= 0.0)) {
        return Err(Error::InvalidMeasure("coefficients must be nonnegative".into()));
    }
    let total: f64 = alpha.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidMeasure(alloc::format!("coefficients sum to {total}, expected 1")));
    }
    Ok(())
}

fn mix(bases: &BasisSet, alpha: &[f64]) -> (Vec<Matrix>, Matrix) {
    let sig: Vec<Matrix> = (0..bases.count()).map(|k| bases.basis(k)).collect();
    let mut w = Matrix::zeros(bases.size(), bases.size());
    for (s, &a) in sig.iter().zip(alpha) {
        w.add_scaled(s, a);
    }
    (sig, w)
}

/// `Ŵ = Σ_k α_k σ(L_k)` on a uniform measure.
pub fn reconstruct(bases: &BasisSet, alpha: &[f64]) -> Result<StepGraphon> {
    check_simplex(alpha, bases.count())?;
    let (_, mut w) = mix(bases, alpha);
    for v in w.as_mut_slice() {
        *v = v.clamp(0.0, 1.0);
    }
    StepGraphon::new(w, NodeMeasure::uniform(bases.size())?)
}

/// Gradients of the reconstruction loss, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FitGrads {
    pub logits: Vec<Matrix>,
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl FitGrads {
    fn zeros(bases: &BasisSet, enc: &CoefficientEncoder) -> Self {
        Self {
            logits: vec![Matrix::zeros(bases.size(), bases.size()); bases.count()],
            weight: Matrix::zeros(enc.count(), enc.feature_dim()),
            bias: vec![0.0; enc.count()],
        }
    }

    fn add_scaled(&mut self, other: &FitGrads, scale: f64) {
        for (a, b) in self.logits.iter_mut().zip(&other.logits) {
            a.add_scaled(b, scale);
        }
        self.weight.add_scaled(&other.weight, scale);
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += scale * b;
        }
    }

    fn is_finite(&self) -> bool {
        self.logits.iter().all(Matrix::is_finite) && self.weight.is_finite() && self.bias.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct LossEval {
    pub loss: f64,
    pub grads: FitGrads,
    /// The plan held fixed while differentiating, `oracle size × basis size`.
    pub plan: Matrix,
}

/// Solves one transport plan between `oracle` and the current reconstruction,
/// then differentiates the loss with that plan held fixed.
pub fn loss_and_grads(
    bases: &BasisSet,
    enc: &CoefficientEncoder,
    g: &Graph,
    oracle: &StepGraphon,
    gw: &GwConfig,
) -> Result<LossEval> {
    loss_and_grads_features(bases, enc, &structural_features(g, enc.feature_dim())?, oracle, gw)
}

pub fn loss_and_grads_features(
    bases: &BasisSet,
    enc: &CoefficientEncoder,
    features: &[f64],
    oracle: &StepGraphon,
    gw: &GwConfig,
) -> Result<LossEval> {
    let alpha = enc.encode(features);
    let (_, w_hat) = mix(bases, &alpha);
    let uniform = NodeMeasure::uniform(bases.size())?;
    let sol = solve_gw(oracle.values(), oracle.measure(), &w_hat, &uniform, gw)?;
    let plan = sol.plan.into_matrix();
    let (loss, grads) = fixed_plan_loss_and_grads(bases, enc, features, oracle, &plan)?;
    Ok(LossEval { loss, grads, plan })
}

/// Loss `Σ (W_ik − Ŵ_jl)² T_ij T_kl` and its analytic gradients for a given
/// plan `t`.
pub fn fixed_plan_loss_and_grads(
    bases: &BasisSet,
    enc: &CoefficientEncoder,
    features: &[f64],
    oracle: &StepGraphon,
    t: &Matrix,
) -> Result<(f64, FitGrads)> {
    if features.len() != enc.feature_dim() {
        return Err(Error::Dimension(alloc::format!(
            "{} features for an encoder expecting {}",
            features.len(),
            enc.feature_dim()
        )));
    }
    if enc.count() != bases.count() {
        return Err(Error::Dimension(alloc::format!(
            "encoder emits {} coefficients for {} bases",
            enc.count(),
            bases.count()
        )));
    }
    if t.rows() != oracle.size() || t.cols() != bases.size() {
        return Err(Error::Dimension(alloc::format!(
            "plan is {}x{}, expected {}x{}",
            t.rows(),
            t.cols(),
            oracle.size(),
            bases.size()
        )));
    }
    let alpha = enc.encode(features);
    let (sig, w_hat) = mix(bases, &alpha);
    let w = oracle.values();
    let loss = gw_cost_matrix(w, &w_hat, t, 2)?;

    // dL/dŴ = 2 (Ŵ ⊙ c cᵀ − Tᵀ W T), c = column sums of T.
    let c = t.col_sums();
    let twt = t.t_matmul(&w.matmul(t)?)?;
    let g_hat = Matrix::from_fn(bases.size(), bases.size(), |j, l| 2.0 * (w_hat[(j, l)] * c[j] * c[l] - twt[(j, l)]));

    let mut grads = FitGrads::zeros(bases, enc);
    let mut d_alpha = vec![0.0; bases.count()];
    for (k, s) in sig.iter().enumerate() {
        d_alpha[k] = g_hat.dot(s);
        let gl = &mut grads.logits[k];
        for i in 0..bases.size() {
            for j in i..bases.size() {
                let local = alpha[k] * s[(i, j)] * (1.0 - s[(i, j)]);
                let v = if i == j { local * g_hat[(i, i)] } else { local * (g_hat[(i, j)] + g_hat[(j, i)]) };
                gl[(i, j)] = v;
                gl[(j, i)] = v;
            }
        }
    }
    // Softmax Jacobian: dz_k = α_k (dα_k − Σ_j α_j dα_j).
    let mean: f64 = alpha.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
    for k in 0..bases.count() {
        let dz = alpha[k] * (d_alpha[k] - mean);
        grads.bias[k] = dz;
        for (wg, &f) in grads.weight.row_mut(k).iter_mut().zip(features) {
            *wg = dz * f;
        }
    }
    Ok((loss, grads))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FitConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub gw: GwConfig,
    pub seed: u64,
    /// Length of the structural feature vector fed to the encoder.
    pub feature_dim: usize,
    /// Train the encoder only.
    pub freeze_bases: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { learning_rate: 0.05, epochs: 100, gw: GwConfig::default(), seed: 0, feature_dim: 8, freeze_bases: false }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(alloc::format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.feature_dim < 3 {
            return Err(Error::Config(alloc::format!("feature dimension must be at least 3, got {}", self.feature_dim)));
        }
        self.gw.validate()
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub bases: BasisSet,
    pub encoder: CoefficientEncoder,
    /// Mean loss before the first step and after every epoch, `epochs + 1`
    /// entries.
    pub history: Vec<f64>,
}

/// Trainable parameters of a fitted model: `C·M(M+1)/2 + C·F + C`.
pub fn parameter_count(bases: &BasisSet, enc: &CoefficientEncoder) -> usize {
    bases.parameter_count() + enc.parameter_count()
}

pub fn fit(corpus: &GraphCorpus, oracle: &StepGraphon, count: usize, size: usize, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let bases = init_bases(corpus, count, size, cfg.seed)?;
    let encoder = CoefficientEncoder::zeros(count, cfg.feature_dim);
    fit_from(corpus, oracle, bases, encoder, cfg)
}

/// Full-batch gradient descent from the given parameters. Each epoch solves
/// one plan per graph, averages the fixed-plan gradients in corpus order and
/// takes a single step.
pub fn fit_from(
    corpus: &GraphCorpus,
    oracle: &StepGraphon,
    mut bases: BasisSet,
    mut encoder: CoefficientEncoder,
    cfg: &FitConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    if encoder.feature_dim() != cfg.feature_dim {
        return Err(Error::Config(alloc::format!(
            "encoder takes {} features but the config asks for {}",
            encoder.feature_dim(),
            cfg.feature_dim
        )));
    }
    let features = corpus_features(corpus, cfg.feature_dim)?;
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    for epoch in 0..=cfg.epochs {
        let (loss, grads) = batch_recon(&bases, &encoder, &features, oracle, &cfg.gw)?;
        log::debug!("fit epoch {epoch}: loss {loss:.6e}");
        history.push(loss);
        if epoch == cfg.epochs {
            break;
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite(alloc::format!("reconstruction gradient at epoch {epoch} (loss {loss})")));
        }
        if !cfg.freeze_bases {
            bases.step(&grads.logits, cfg.learning_rate);
        }
        encoder.step(&grads.weight, &grads.bias, cfg.learning_rate);
    }
    Ok(FitResult { bases, encoder, history })
}

pub(crate) fn corpus_features(corpus: &GraphCorpus, dim: usize) -> Result<Vec<Vec<f64>>> {
    corpus.iter().map(|g| structural_features(g, dim)).collect()
}

/// Mean loss and mean gradients over the corpus.
pub(crate) fn batch_recon(
    bases: &BasisSet,
    enc: &CoefficientEncoder,
    features: &[Vec<f64>],
    oracle: &StepGraphon,
    gw: &GwConfig,
) -> Result<(f64, FitGrads)> {
    let evals = par::map(features, |f| loss_and_grads_features(bases, enc, f, oracle, gw));
    let scale = 1.0 / features.len() as f64;
    let mut loss = 0.0;
    let mut grads = FitGrads::zeros(bases, enc);
    for e in evals {
        let e = e?;
        loss += scale * e.loss;
        grads.add_scaled(&e.grads, scale);
    }
    Ok((loss, grads))
}
