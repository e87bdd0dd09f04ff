//! Per-iteration classifiers trained on the labeled pool.
//!
//! Two training schemes are available, each with an imbalance-aware and a
//! plain variant:
//!
//! - one-vs-rest linear SVMs over the frozen embeddings, optionally with
//!   per-class hinge-loss weights ([`Scheme::CsSvm`], [`Scheme::SvmPlain`]);
//! - a trainable one-hidden-layer softmax head, optionally with its output
//!   rectified by the training class priors ([`Scheme::SoftmaxTh`],
//!   [`Scheme::SoftmaxPlain`]).
//!
//! All models expose normalized class-probability vectors. Classes without
//! labeled samples are left out of training and always get probability 0.

mod eval;
mod schedule;
pub mod softmax;
pub mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{EmbeddingStore, LabelOracle, PoolState};
use crate::features::FeatureMatrix;

pub use eval::{balanced_accuracy, cross_validate_scheme, evaluate_balanced, per_class_recall, stratified_split};
pub use softmax::MlpParams;
pub use svm::LinearParams;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("need at least 2 labeled classes, found {0}")]
    TooFewClasses(usize),
    #[error("training diverged (non-finite loss); lower `{hyperparameter}` (currently {value})")]
    Diverged { hyperparameter: &'static str, value: f64 },
    #[error("invalid training config: `{field}` {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("no class has labeled samples")]
    NoLabeledClasses,
    #[error("expected {expected} class weights, got {found}")]
    WeightCount { expected: usize, found: usize },
    #[error("class weights must be positive and finite")]
    NonPositiveWeight,
    #[error("unknown sample id {0}")]
    InvalidId(usize),
    #[error("model has fewer than 2 classes")]
    SingleClassModel,
    #[error("class {0} is absent from the evaluation set")]
    ClassAbsent(usize),
    #[error("degenerate cross-validation fold: {0}")]
    FoldDegenerate(String),
    #[error("embedding dimension {found} does not match the model ({expected})")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unknown scheme {0:?}")]
    UnknownScheme(String),
}

/// Training scheme of a [`ClassifierModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "CS_SVM")]
    CsSvm,
    #[serde(rename = "SOFTMAX_TH")]
    SoftmaxTh,
    #[serde(rename = "SVM_PLAIN")]
    SvmPlain,
    #[serde(rename = "SOFTMAX_PLAIN")]
    SoftmaxPlain,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::CsSvm => "CS_SVM",
            Scheme::SoftmaxTh => "SOFTMAX_TH",
            Scheme::SvmPlain => "SVM_PLAIN",
            Scheme::SoftmaxPlain => "SOFTMAX_PLAIN",
        }
    }

    pub fn is_softmax(self) -> bool {
        matches!(self, Scheme::SoftmaxTh | Scheme::SoftmaxPlain)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "CS_SVM" => Ok(Scheme::CsSvm),
            "SOFTMAX_TH" => Ok(Scheme::SoftmaxTh),
            "SVM_PLAIN" | "SVM" => Ok(Scheme::SvmPlain),
            "SOFTMAX_PLAIN" | "SOFTMAX" => Ok(Scheme::SoftmaxPlain),
            _ => Err(TrainError::UnknownScheme(s.to_string())),
        }
    }
}

/// SGD hyperparameters shared by both model families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// L2 coefficient on the weights (biases are not regularized).
    pub l2: f64,
    /// Hidden width of the softmax head; 0 gives multinomial logistic regression.
    pub hidden_width: usize,
    /// Epochs without loss improvement before the rate is divided by 10.
    pub plateau_patience: usize,
}

impl TrainConfig {
    pub fn svm_default() -> Self {
        Self {
            epochs: 30,
            learning_rate: 0.1,
            batch_size: 32,
            l2: 1e-4,
            hidden_width: 0,
            plateau_patience: 5,
        }
    }

    /// 60 epochs, rate 0.01, batch 32, ×0.1 after a 10-epoch plateau.
    pub fn softmax_default() -> Self {
        Self {
            epochs: 60,
            learning_rate: 0.01,
            batch_size: 32,
            l2: 1e-4,
            hidden_width: 256,
            plateau_patience: 10,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |field, reason: &str| {
            Err(TrainError::InvalidConfig {
                field,
                reason: reason.to_string(),
            })
        };
        if self.epochs == 0 {
            return bad("epochs", "must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate", "must be positive");
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return bad("l2", "must be non-negative");
        }
        Ok(())
    }
}

/// Hyperparameters of both schemes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfigs {
    pub svm: TrainConfig,
    pub softmax: TrainConfig,
}

impl Default for SchemeConfigs {
    fn default() -> Self {
        Self {
            svm: TrainConfig::svm_default(),
            softmax: TrainConfig::softmax_default(),
        }
    }
}

/// Per-class hinge-loss multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    weights: Vec<f64>,
    empty_classes: Vec<usize>,
}

impl ClassWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self, TrainError> {
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(TrainError::NonPositiveWeight);
        }
        Ok(Self {
            weights,
            empty_classes: Vec::new(),
        })
    }

    pub fn uniform(n_classes: usize) -> Self {
        Self {
            weights: vec![1.0; n_classes],
            empty_classes: Vec::new(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    /// Classes that had no samples when the weights were computed.
    pub fn empty_classes(&self) -> &[usize] {
        &self.empty_classes
    }
}

/// `w_c = s / (n_eff · s_c)`: `s` labeled samples, `n_eff` non-empty
/// classes, `s_c` samples of class `c`. Empty classes get weight 1.
pub fn class_weights_balanced(per_class_counts: &[usize]) -> Result<ClassWeights, TrainError> {
    let total: usize = per_class_counts.iter().sum();
    let n_eff = per_class_counts.iter().filter(|&&c| c > 0).count();
    if total == 0 {
        return Err(TrainError::NoLabeledClasses);
    }
    let mut empty_classes = Vec::new();
    let weights = per_class_counts
        .iter()
        .enumerate()
        .map(|(c, &count)| {
            if count == 0 {
                empty_classes.push(c);
                1.0
            } else {
                total as f64 / (n_eff as f64 * count as f64)
            }
        })
        .collect();
    Ok(ClassWeights { weights, empty_classes })
}

/// A normalized class-probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Wrap probabilities that are already normalized.
    pub fn new(probs: Vec<f64>) -> Self {
        Self(probs)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Highest-probability class, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (c, &p) in self.0.iter().enumerate().skip(1) {
            if p > self.0[best] {
                best = c;
            }
        }
        best
    }

    /// Two most probable classes and the probability gap between them.
    pub fn top2(&self) -> Result<Top2, TrainError> {
        if self.0.len() < 2 {
            return Err(TrainError::SingleClassModel);
        }
        let first = self.argmax();
        let mut second = usize::from(first == 0);
        for (c, &p) in self.0.iter().enumerate() {
            if c != first && p > self.0[second] {
                second = c;
            }
        }
        Ok(Top2 {
            first,
            second,
            margin: self.0[first] - self.0[second],
        })
    }
}

/// Result of [`ClassifierModel::predict_top2`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Top2 {
    pub first: usize,
    pub second: usize,
    pub margin: f64,
}

/// Softmax over the classes flagged in `present`; others get 0.
pub fn masked_softmax(scores: &[f64], present: &[bool]) -> Vec<f64> {
    let max = scores
        .iter()
        .zip(present)
        .filter(|(_, &p)| p)
        .map(|(&s, _)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores
        .iter()
        .zip(present)
        .map(|(&s, &p)| if p { (s - max).exp() } else { 0.0 })
        .collect();
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= z);
    out
}

/// Divide probabilities by class priors and renormalize.
pub fn rectify_by_priors(probs: &[f64], priors: &[f64]) -> ProbVector {
    let mut out: Vec<f64> = probs.iter().zip(priors).map(|(p, q)| p / q).collect();
    let z: f64 = out.iter().sum();
    if z > 0.0 {
        out.iter_mut().for_each(|p| *p /= z);
    }
    ProbVector(out)
}

/// Summary of an SGD run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub seed: u64,
    /// Full training objective after the first epoch (summed over the
    /// binary problems of one-vs-rest models).
    pub first_epoch_loss: f64,
    /// Objective of the returned parameters.
    pub final_loss: f64,
    /// Classes left out of training for lack of labeled samples.
    pub absent_classes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Linear(LinearParams),
    Mlp(MlpParams),
}

/// Labeled rows gathered into a dense matrix.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    dim: usize,
    x: Vec<f64>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl TrainingSet {
    pub fn from_parts(dim: usize, x: Vec<f64>, labels: Vec<usize>, n_classes: usize) -> Self {
        assert_eq!(x.len(), dim * labels.len());
        assert!(labels.iter().all(|&l| l < n_classes));
        Self {
            dim,
            x,
            labels,
            n_classes,
        }
    }

    pub fn gather(store: &EmbeddingStore, ids: &[usize], oracle: &LabelOracle) -> Result<Self, TrainError> {
        let mut x = Vec::with_capacity(ids.len() * store.dim());
        let mut labels = Vec::with_capacity(ids.len());
        for &id in ids {
            if id >= store.n_samples() || id >= oracle.n_samples() {
                return Err(TrainError::InvalidId(id));
            }
            x.extend_from_slice(store.row(id));
            labels.push(oracle.label(id));
        }
        Ok(Self::from_parts(store.dim(), x, labels, oracle.n_classes()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    fn present(&self) -> Result<Vec<bool>, TrainError> {
        let present: Vec<bool> = self.class_counts().iter().map(|&c| c > 0).collect();
        let n = present.iter().filter(|&&p| p).count();
        if n < 2 {
            return Err(TrainError::TooFewClasses(n));
        }
        Ok(present)
    }
}

/// A trained model. Immutable and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    scheme: Scheme,
    n_classes: usize,
    dim: usize,
    params: Params,
    present: Vec<bool>,
    class_priors: Vec<f64>,
    meta: TrainingMeta,
}

impl ClassifierModel {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Classes the model was trained on.
    pub fn present_classes(&self) -> &[bool] {
        &self.present
    }

    /// Training-set class priors with +1 smoothing.
    pub fn class_priors(&self) -> &[f64] {
        &self.class_priors
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    /// Decision values (SVM) or logits (softmax); absent classes are -inf.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut s = match &self.params {
            Params::Linear(p) => p.decision_values(x),
            Params::Mlp(p) => p.logits(&p.hidden(x)),
        };
        for (v, &p) in s.iter_mut().zip(&self.present) {
            if !p {
                *v = f64::NEG_INFINITY;
            }
        }
        s
    }

    /// Class probabilities of one embedding vector.
    pub fn proba(&self, x: &[f64]) -> ProbVector {
        let raw = masked_softmax(&self.scores(x), &self.present);
        match self.scheme {
            Scheme::SoftmaxTh => rectify_by_priors(&raw, &self.class_priors),
            _ => ProbVector(raw),
        }
    }

    fn check(&self, store: &EmbeddingStore, ids: &[usize]) -> Result<(), TrainError> {
        if store.dim() != self.dim {
            return Err(TrainError::DimensionMismatch {
                expected: self.dim,
                found: store.dim(),
            });
        }
        match ids.iter().find(|&&id| id >= store.n_samples()) {
            Some(&id) => Err(TrainError::InvalidId(id)),
            None => Ok(()),
        }
    }

    pub fn predict_proba(&self, store: &EmbeddingStore, ids: &[usize]) -> Result<Vec<ProbVector>, TrainError> {
        self.check(store, ids)?;
        Ok(ids.iter().map(|&id| self.proba(store.row(id))).collect())
    }

    pub fn predict_top2(&self, store: &EmbeddingStore, ids: &[usize]) -> Result<Vec<Top2>, TrainError> {
        if self.n_classes < 2 {
            return Err(TrainError::SingleClassModel);
        }
        self.predict_proba(store, ids)?.iter().map(ProbVector::top2).collect()
    }

    pub fn predict(&self, store: &EmbeddingStore, ids: &[usize]) -> Result<Vec<usize>, TrainError> {
        Ok(self.predict_proba(store, ids)?.iter().map(ProbVector::argmax).collect())
    }

    /// The representation this model learned, for every sample of `store`:
    /// hidden activations of a softmax head. `None` when the model works on
    /// the frozen embeddings directly.
    pub fn learned_features(&self, store: &EmbeddingStore) -> Option<FeatureMatrix> {
        match &self.params {
            Params::Mlp(p) if p.hidden_width() > 0 => {
                let mut data = Vec::with_capacity(store.n_samples() * p.hidden_width());
                for id in 0..store.n_samples() {
                    data.extend(p.hidden(store.row(id)));
                }
                Some(FeatureMatrix::new(p.hidden_width(), data))
            }
            _ => None,
        }
    }
}

fn smoothed_priors(counts: &[usize]) -> Vec<f64> {
    let total = counts.iter().sum::<usize>() + counts.len();
    counts.iter().map(|&c| (c + 1) as f64 / total as f64).collect()
}

/// Train any scheme on the labeled rows `ids`. Cost-sensitive weights are
/// derived from the class counts of `ids`.
pub fn train_scheme(
    scheme: Scheme,
    store: &EmbeddingStore,
    ids: &[usize],
    oracle: &LabelOracle,
    configs: &SchemeConfigs,
    seed: u64,
) -> Result<ClassifierModel, TrainError> {
    let set = TrainingSet::gather(store, ids, oracle)?;
    match scheme {
        Scheme::CsSvm => {
            let weights = class_weights_balanced(&set.class_counts())?;
            svm::fit(&set, &weights, &configs.svm, seed, scheme)
        }
        Scheme::SvmPlain => {
            let weights = ClassWeights::uniform(set.n_classes());
            svm::fit(&set, &weights, &configs.svm, seed, scheme)
        }
        Scheme::SoftmaxTh | Scheme::SoftmaxPlain => softmax::fit(&set, &configs.softmax, seed, scheme),
    }
}

/// Cost-sensitive one-vs-rest SVMs on the labeled part of `pool`.
pub fn train_cs_svm(
    store: &EmbeddingStore,
    pool: &PoolState,
    oracle: &LabelOracle,
    weights: &ClassWeights,
    config: &TrainConfig,
    seed: u64,
) -> Result<ClassifierModel, TrainError> {
    let set = TrainingSet::gather(store, pool.labeled(), oracle)?;
    svm::fit(&set, weights, config, seed, Scheme::CsSvm)
}

/// Softmax head with prior thresholding on the labeled part of `pool`.
pub fn train_softmax_th(
    store: &EmbeddingStore,
    pool: &PoolState,
    oracle: &LabelOracle,
    config: &TrainConfig,
    seed: u64,
) -> Result<ClassifierModel, TrainError> {
    let set = TrainingSet::gather(store, pool.labeled(), oracle)?;
    softmax::fit(&set, config, seed, Scheme::SoftmaxTh)
}
