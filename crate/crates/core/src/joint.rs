//! A linear softmax classifier over structural features trained jointly with
//! the graphon reconstruction loss.
//!
//! The classifier only sees cross-entropy gradients and the encoder and bases
//! only see the scaled reconstruction gradients; the featurizer itself is not
//! trainable, so nothing is shared that could carry gradients between them.

use alloc::vec;
use alloc::vec::Vec;

use crate::basis::{batch_recon, corpus_features, init_bases, structural_features, BasisSet, CoefficientEncoder, FitConfig};
use crate::math::{ln, softmax};
use crate::{Error, Graph, GraphCorpus, Matrix, Result, StepGraphon};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ToyClassifier {
    weight: Matrix,
    bias: Vec<f64>,
}

impl ToyClassifier {
    pub fn zeros(classes: usize, feature_dim: usize) -> Self {
        Self { weight: Matrix::zeros(classes, feature_dim), bias: vec![0.0; classes] }
    }

    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        if weight.rows() != bias.len() || bias.is_empty() {
            return Err(Error::Dimension(alloc::format!(
                "classifier weight has {} rows but bias has {} entries",
                weight.rows(),
                bias.len()
            )));
        }
        if !weight.is_finite() || bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("classifier parameters".into()));
        }
        Ok(Self { weight, bias })
    }

    pub fn classes(&self) -> usize {
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

    pub fn probabilities(&self, features: &[f64]) -> Vec<f64> {
        let mut z = self.weight.mat_vec(features);
        for (v, b) in z.iter_mut().zip(&self.bias) {
            *v += b;
        }
        softmax(&mut z);
        z
    }

    /// Most probable class; ties go to the lowest index.
    pub fn predict(&self, features: &[f64]) -> usize {
        let p = self.probabilities(features);
        (0..p.len()).fold(0, |best, k| if p[k] > p[best] { k } else { best })
    }

    fn step(&mut self, grads: &ClassifierGrads, lr: f64) {
        self.weight.add_scaled(&grads.weight, -lr);
        for (b, g) in self.bias.iter_mut().zip(&grads.bias) {
            *b -= lr * g;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierGrads {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl ClassifierGrads {
    fn zeros(classes: usize, feature_dim: usize) -> Self {
        Self { weight: Matrix::zeros(classes, feature_dim), bias: vec![0.0; classes] }
    }
}

fn label_index(g: &Graph, classes: usize) -> Result<usize> {
    let label = g.label().ok_or(Error::Unlabeled)?;
    if label < 0 || label as u64 >= classes as u64 {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    Ok(label as usize)
}

/// Softmax cross-entropy of the graph's label and its gradients.
pub fn ce_loss(clf: &ToyClassifier, g: &Graph) -> Result<(f64, ClassifierGrads)> {
    let label = label_index(g, clf.classes())?;
    ce_loss_features(clf, &structural_features(g, clf.feature_dim())?, label)
}

pub fn ce_loss_features(clf: &ToyClassifier, features: &[f64], label: usize) -> Result<(f64, ClassifierGrads)> {
    if features.len() != clf.feature_dim() {
        return Err(Error::Dimension(alloc::format!(
            "{} features for a classifier expecting {}",
            features.len(),
            clf.feature_dim()
        )));
    }
    if label >= clf.classes() {
        return Err(Error::LabelOutOfRange { label: label as i64, classes: clf.classes() });
    }
    let p = clf.probabilities(features);
    let loss = -ln(p[label]);
    let mut grads = ClassifierGrads::zeros(clf.classes(), clf.feature_dim());
    for k in 0..clf.classes() {
        let dz = p[k] - if k == label { 1.0 } else { 0.0 };
        grads.bias[k] = dz;
        for (w, &f) in grads.weight.row_mut(k).iter_mut().zip(features) {
            *w = dz * f;
        }
    }
    Ok((loss, grads))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct JointConfig {
    /// Weight of the reconstruction loss in the total.
    pub lambda: f64,
    /// Shared optimizer settings; the classifier uses the same learning rate.
    pub fit: FitConfig,
    pub classes: usize,
    pub bases: usize,
    pub basis_size: usize,
}

impl Default for JointConfig {
    fn default() -> Self {
        Self { lambda: 1.0, fit: FitConfig::default(), classes: 2, bases: 32, basis_size: 50 }
    }
}

impl JointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(alloc::format!("lambda must be a nonnegative number, got {}", self.lambda)));
        }
        if self.classes == 0 || self.bases == 0 || self.basis_size == 0 {
            return Err(Error::Config("classes, bases and basis size must be positive".into()));
        }
        self.fit.validate()
    }
}

/// Losses after `epoch` updates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRecord {
    pub epoch: usize,
    pub task_loss: f64,
    pub recon_loss: f64,
    pub total_loss: f64,
    pub train_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct JointResult {
    pub classifier: ToyClassifier,
    pub bases: BasisSet,
    pub encoder: CoefficientEncoder,
    /// One record before training and one after every epoch.
    pub history: Vec<EpochRecord>,
}

struct Labeled {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

fn labeled(corpus: &GraphCorpus, classes: usize, feature_dim: usize) -> Result<Labeled> {
    let labels = corpus.iter().map(|g| label_index(g, classes)).collect::<Result<Vec<_>>>()?;
    Ok(Labeled { features: corpus_features(corpus, feature_dim)?, labels })
}

/// Mean cross-entropy, mean gradients and accuracy over the corpus.
fn batch_task(clf: &ToyClassifier, data: &Labeled) -> Result<(f64, ClassifierGrads, f64)> {
    let scale = 1.0 / data.labels.len() as f64;
    let mut loss = 0.0;
    let mut correct = 0usize;
    let mut grads = ClassifierGrads::zeros(clf.classes(), clf.feature_dim());
    for (f, &y) in data.features.iter().zip(&data.labels) {
        let (l, g) = ce_loss_features(clf, f, y)?;
        loss += scale * l;
        grads.weight.add_scaled(&g.weight, scale);
        for (a, b) in grads.bias.iter_mut().zip(&g.bias) {
            *a += scale * b;
        }
        if clf.predict(f) == y {
            correct += 1;
        }
    }
    Ok((loss, grads, correct as f64 * scale))
}

fn check_finite(grads: &ClassifierGrads, epoch: usize, loss: f64) -> Result<()> {
    if !grads.weight.is_finite() || grads.bias.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(alloc::format!("classifier gradient at epoch {epoch} (loss {loss})")));
    }
    Ok(())
}

/// Full-batch training of `task + λ·recon`. Every graph must carry a label
/// in `0..classes`.
pub fn train_joint(corpus: &GraphCorpus, oracle: &StepGraphon, cfg: &JointConfig) -> Result<JointResult> {
    cfg.validate()?;
    let data = labeled(corpus, cfg.classes, cfg.fit.feature_dim)?;
    let lr = cfg.fit.learning_rate;
    let mut classifier = ToyClassifier::zeros(cfg.classes, cfg.fit.feature_dim);
    let mut bases = init_bases(corpus, cfg.bases, cfg.basis_size, cfg.fit.seed)?;
    let mut encoder = CoefficientEncoder::zeros(cfg.bases, cfg.fit.feature_dim);
    let mut history = Vec::with_capacity(cfg.fit.epochs + 1);

    for epoch in 0..=cfg.fit.epochs {
        let (task_loss, task_grads, train_accuracy) = batch_task(&classifier, &data)?;
        let (recon_loss, recon_grads) = batch_recon(&bases, &encoder, &data.features, oracle, &cfg.fit.gw)?;
        let total_loss = task_loss + cfg.lambda * recon_loss;
        log::debug!("joint epoch {epoch}: task {task_loss:.6} recon {recon_loss:.6e} accuracy {train_accuracy:.3}");
        history.push(EpochRecord { epoch, task_loss, recon_loss, total_loss, train_accuracy });
        if epoch == cfg.fit.epochs {
            break;
        }
        check_finite(&task_grads, epoch, task_loss)?;
        classifier.step(&task_grads, lr);

        let scaled = lr * cfg.lambda;
        if scaled != 0.0 {
            if recon_grads.logits.iter().any(|m| !m.is_finite())
                || !recon_grads.weight.is_finite()
                || recon_grads.bias.iter().any(|v| !v.is_finite())
            {
                return Err(Error::NonFinite(alloc::format!("reconstruction gradient at epoch {epoch}")));
            }
            if !cfg.fit.freeze_bases {
                bases.step(&recon_grads.logits, scaled);
            }
            encoder.step(&recon_grads.weight, &recon_grads.bias, scaled);
        }
    }
    Ok(JointResult { classifier, bases, encoder, history })
}

/// The classifier half of [`train_joint`] on its own. Records carry a zero
/// reconstruction loss.
pub fn train_ce_only(corpus: &GraphCorpus, classes: usize, cfg: &FitConfig) -> Result<(ToyClassifier, Vec<EpochRecord>)> {
    cfg.validate()?;
    if classes == 0 {
        return Err(Error::Config("classes must be positive".into()));
    }
    let data = labeled(corpus, classes, cfg.feature_dim)?;
    let mut classifier = ToyClassifier::zeros(classes, cfg.feature_dim);
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    for epoch in 0..=cfg.epochs {
        let (task_loss, grads, train_accuracy) = batch_task(&classifier, &data)?;
        history.push(EpochRecord { epoch, task_loss, recon_loss: 0.0, total_loss: task_loss, train_accuracy });
        if epoch == cfg.epochs {
            break;
        }
        check_finite(&grads, epoch, task_loss)?;
        classifier.step(&grads, cfg.learning_rate);
    }
    Ok((classifier, history))
}
