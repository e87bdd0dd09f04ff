//! One-vs-rest linear SVMs trained by mini-batch SGD on the L2-regularized,
//! sample-weighted hinge loss
//!
//! ```text
//! J(w, b) = λ/2 ‖w‖² + 1/N Σᵢ ωᵢ · max(0, 1 − tᵢ (w·xᵢ + b))
//! ```
//!
//! with `tᵢ = ±1` and `ωᵢ` the weight of sample `i`'s class, rescaled so
//! the weights average to 1 over the training set.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::schedule::Plateau;
use super::{ClassWeights, ClassifierModel, Params, Scheme, TrainConfig, TrainError, TrainingMeta, TrainingSet};
use crate::rng;

/// Per-class weight vectors and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub n_classes: usize,
    pub dim: usize,
    /// `n_classes × dim`, row-major; rows of absent classes stay zero.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearParams {
    pub fn weight_row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.dim..(class + 1) * self.dim]
    }

    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| dot(self.weight_row(c), x) + self.bias[c])
            .collect()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One binary problem: targets ±1 and per-sample loss weights.
#[derive(Debug, Clone)]
pub struct BinaryProblem<'a> {
    pub set: &'a TrainingSet,
    pub targets: Vec<f64>,
    pub sample_weights: Vec<f64>,
    pub l2: f64,
}

impl<'a> BinaryProblem<'a> {
    /// Class `positive` against the rest, weighting samples by class.
    pub fn one_vs_rest(set: &'a TrainingSet, positive: usize, class_weights: &[f64], l2: f64) -> Self {
        let raw: Vec<f64> = set.labels().iter().map(|&l| class_weights[l]).collect();
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        Self {
            set,
            targets: set
                .labels()
                .iter()
                .map(|&l| if l == positive { 1.0 } else { -1.0 })
                .collect(),
            sample_weights: raw.iter().map(|w| w / mean).collect(),
            l2,
        }
    }

    /// Objective restricted to the rows `batch`.
    pub fn objective(&self, w: &[f64], b: f64, batch: &[usize]) -> f64 {
        let hinge: f64 = batch
            .iter()
            .map(|&i| {
                let m = self.targets[i] * (dot(w, self.set.row(i)) + b);
                self.sample_weights[i] * (1.0 - m).max(0.0)
            })
            .sum();
        0.5 * self.l2 * dot(w, w) + hinge / batch.len() as f64
    }

    /// Gradient of [`Self::objective`] written into `grad_w`; returns the bias gradient.
    pub fn gradient_into(&self, w: &[f64], b: f64, batch: &[usize], grad_w: &mut [f64]) -> f64 {
        for (g, wi) in grad_w.iter_mut().zip(w) {
            *g = self.l2 * wi;
        }
        let scale = 1.0 / batch.len() as f64;
        let mut grad_b = 0.0;
        for &i in batch {
            let x = self.set.row(i);
            let t = self.targets[i];
            if t * (dot(w, x) + b) < 1.0 {
                let c = -self.sample_weights[i] * t * scale;
                for (g, xi) in grad_w.iter_mut().zip(x) {
                    *g += c * xi;
                }
                grad_b += c;
            }
        }
        grad_b
    }

    pub fn all_rows(&self) -> Vec<usize> {
        (0..self.set.len()).collect()
    }
}

struct BinaryFit {
    w: Vec<f64>,
    b: f64,
    first_loss: f64,
    best_loss: f64,
}

/// SGD on one binary problem. The visiting order depends only on `seed`,
/// so every one-vs-rest problem of a model sees the same batches. The
/// parameters with the lowest end-of-epoch objective are returned.
fn fit_binary(problem: &BinaryProblem, config: &TrainConfig, seed: u64) -> Result<BinaryFit, TrainError> {
    let dim = problem.set.dim();
    let all = problem.all_rows();
    let mut order = all.clone();
    let mut rng = rng::seeded(seed);
    let mut schedule = Plateau::new(config.learning_rate, config.plateau_patience);
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut grad = vec![0.0; dim];
    let mut best = (f64::INFINITY, w.clone(), b);
    let mut first_loss = None;

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let rate = schedule.rate();
        for batch in order.chunks(config.batch_size) {
            let gb = problem.gradient_into(&w, b, batch, &mut grad);
            for (wi, g) in w.iter_mut().zip(&grad) {
                *wi -= rate * g;
            }
            b -= rate * gb;
        }
        let loss = problem.objective(&w, b, &all);
        if !loss.is_finite() {
            return Err(TrainError::Diverged {
                hyperparameter: "learning_rate",
                value: config.learning_rate,
            });
        }
        first_loss.get_or_insert(loss);
        if loss < best.0 {
            best = (loss, w.clone(), b);
        }
        schedule.observe(loss);
    }
    Ok(BinaryFit {
        w: best.1,
        b: best.2,
        first_loss: first_loss.unwrap_or(f64::INFINITY),
        best_loss: best.0,
    })
}

/// Fit one-vs-rest SVMs for every class present in `set`, in parallel.
pub(crate) fn fit(
    set: &TrainingSet,
    weights: &ClassWeights,
    config: &TrainConfig,
    seed: u64,
    scheme: Scheme,
) -> Result<ClassifierModel, TrainError> {
    config.validate()?;
    if weights.as_slice().len() != set.n_classes() {
        return Err(TrainError::WeightCount {
            expected: set.n_classes(),
            found: weights.as_slice().len(),
        });
    }
    let present = set.present()?;
    let n = set.n_classes();
    let dim = set.dim();

    let fits: Vec<Option<BinaryFit>> = (0..n)
        .into_par_iter()
        .map(|c| {
            if !present[c] {
                return Ok(None);
            }
            let problem = BinaryProblem::one_vs_rest(set, c, weights.as_slice(), config.l2);
            fit_binary(&problem, config, seed).map(Some)
        })
        .collect::<Result<_, _>>()?;

    let mut params = LinearParams {
        n_classes: n,
        dim,
        weights: vec![0.0; n * dim],
        bias: vec![0.0; n],
    };
    let (mut first_loss, mut final_loss) = (0.0, 0.0);
    for (c, fit) in fits.into_iter().enumerate() {
        if let Some(fit) = fit {
            params.weights[c * dim..(c + 1) * dim].copy_from_slice(&fit.w);
            params.bias[c] = fit.b;
            first_loss += fit.first_loss;
            final_loss += fit.best_loss;
        }
    }
    let counts = set.class_counts();
    Ok(ClassifierModel {
        scheme,
        n_classes: n,
        dim,
        params: Params::Linear(params),
        class_priors: super::smoothed_priors(&counts),
        meta: TrainingMeta {
            epochs: config.epochs,
            seed,
            first_epoch_loss: first_loss,
            final_loss,
            absent_classes: (0..n).filter(|&c| !present[c]).collect(),
        },
        present,
    })
}
