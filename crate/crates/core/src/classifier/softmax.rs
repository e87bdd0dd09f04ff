//! A trainable head over the frozen embeddings: one ReLU hidden layer and a
//! softmax output, trained with cross-entropy by mini-batch SGD.
//!
//! The hidden layer gets He-normal initialization from the seed; the output
//! layer starts at zero so that the model treats class indices
//! symmetrically. With `hidden_width = 0` the head is multinomial logistic
//! regression on the embeddings.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use super::schedule::Plateau;
use super::{masked_softmax, ClassifierModel, Params, Scheme, TrainConfig, TrainError, TrainingMeta, TrainingSet};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    dim: usize,
    hidden: usize,
    n_classes: usize,
    /// `hidden × dim`
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `n_classes × width`, where width is `hidden`, or `dim` without a hidden layer.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpParams {
    pub fn zeros(dim: usize, hidden: usize, n_classes: usize) -> Self {
        let width = if hidden > 0 { hidden } else { dim };
        Self {
            dim,
            hidden,
            n_classes,
            w1: vec![0.0; hidden * dim],
            b1: vec![0.0; hidden],
            w2: vec![0.0; n_classes * width],
            b2: vec![0.0; n_classes],
        }
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden
    }

    fn width(&self) -> usize {
        if self.hidden > 0 {
            self.hidden
        } else {
            self.dim
        }
    }

    /// Input of the output layer: ReLU activations, or `x` itself.
    pub fn hidden(&self, x: &[f64]) -> Vec<f64> {
        if self.hidden == 0 {
            return x.to_vec();
        }
        (0..self.hidden)
            .map(|j| {
                let row = &self.w1[j * self.dim..(j + 1) * self.dim];
                let pre: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.b1[j];
                pre.max(0.0)
            })
            .collect()
    }

    pub fn logits(&self, h: &[f64]) -> Vec<f64> {
        let width = self.width();
        (0..self.n_classes)
            .map(|c| {
                let row = &self.w2[c * width..(c + 1) * width];
                row.iter().zip(h).map(|(a, b)| a * b).sum::<f64>() + self.b2[c]
            })
            .collect()
    }

    /// All parameters in the order `w1, b1, w2, b2`.
    pub fn to_flat(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut rest = flat;
        for part in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            let (head, tail) = rest.split_at(part.len());
            part.copy_from_slice(head);
            rest = tail;
        }
        assert!(rest.is_empty());
    }

    fn fill_zero(&mut self) {
        for part in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            part.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    fn axpy(&mut self, alpha: f64, other: &MlpParams) {
        for (dst, src) in [
            (&mut self.w1, &other.w1),
            (&mut self.b1, &other.b1),
            (&mut self.w2, &other.w2),
            (&mut self.b2, &other.b2),
        ] {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += alpha * s;
            }
        }
    }

    fn weight_norm_sq(&self) -> f64 {
        self.w1.iter().chain(&self.w2).map(|v| v * v).sum()
    }
}

/// Mean cross-entropy over `batch` plus `l2/2 (‖W1‖² + ‖W2‖²)`.
pub fn cross_entropy_objective(
    params: &MlpParams,
    set: &TrainingSet,
    batch: &[usize],
    present: &[bool],
    l2: f64,
) -> f64 {
    let ce: f64 = batch
        .iter()
        .map(|&i| {
            let p = masked_softmax(&params.logits(&params.hidden(set.row(i))), present);
            -p[set.labels()[i]].ln()
        })
        .sum();
    ce / batch.len() as f64 + 0.5 * l2 * params.weight_norm_sq()
}

/// Gradient of [`cross_entropy_objective`] written into `grad`.
pub fn cross_entropy_gradient_into(
    params: &MlpParams,
    set: &TrainingSet,
    batch: &[usize],
    present: &[bool],
    l2: f64,
    grad: &mut MlpParams,
) {
    grad.fill_zero();
    let (dim, hidden, width) = (params.dim, params.hidden, params.width());
    let scale = 1.0 / batch.len() as f64;
    let mut dh = vec![0.0; width];
    for &i in batch {
        let x = set.row(i);
        let h = params.hidden(x);
        let mut dz = masked_softmax(&params.logits(&h), present);
        dz[set.labels()[i]] -= 1.0;
        dh.iter_mut().for_each(|v| *v = 0.0);
        for (c, &g) in dz.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let g = g * scale;
            let w_row = &params.w2[c * width..(c + 1) * width];
            let g_row = &mut grad.w2[c * width..(c + 1) * width];
            for k in 0..width {
                g_row[k] += g * h[k];
                dh[k] += g * w_row[k];
            }
            grad.b2[c] += g;
        }
        if hidden > 0 {
            for j in 0..hidden {
                // ReLU'(pre) is 1 exactly where the activation is positive
                if h[j] <= 0.0 {
                    continue;
                }
                let g = dh[j];
                let g_row = &mut grad.w1[j * dim..(j + 1) * dim];
                for (gw, xi) in g_row.iter_mut().zip(x) {
                    *gw += g * xi;
                }
                grad.b1[j] += g;
            }
        }
    }
    for (g, w) in grad.w1.iter_mut().zip(&params.w1) {
        *g += l2 * w;
    }
    for (g, w) in grad.w2.iter_mut().zip(&params.w2) {
        *g += l2 * w;
    }
}

pub(crate) fn fit(
    set: &TrainingSet,
    config: &TrainConfig,
    seed: u64,
    scheme: Scheme,
) -> Result<ClassifierModel, TrainError> {
    config.validate()?;
    let present = set.present()?;
    let (dim, n) = (set.dim(), set.n_classes());
    let mut rng = rng::seeded(seed);

    let mut params = MlpParams::zeros(dim, config.hidden_width, n);
    if config.hidden_width > 0 {
        let he = Normal::new(0.0, (2.0 / dim as f64).sqrt()).expect("positive std");
        params.w1.iter_mut().for_each(|w| *w = he.sample(&mut rng));
    }

    let all: Vec<usize> = (0..set.len()).collect();
    let mut order = all.clone();
    let mut grad = MlpParams::zeros(dim, config.hidden_width, n);
    let mut schedule = Plateau::new(config.learning_rate, config.plateau_patience);
    let mut best = (f64::INFINITY, params.clone());
    let mut first_loss = None;

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let rate = schedule.rate();
        for batch in order.chunks(config.batch_size) {
            cross_entropy_gradient_into(&params, set, batch, &present, config.l2, &mut grad);
            params.axpy(-rate, &grad);
        }
        let loss = cross_entropy_objective(&params, set, &all, &present, config.l2);
        if !loss.is_finite() {
            return Err(TrainError::Diverged {
                hyperparameter: "learning_rate",
                value: config.learning_rate,
            });
        }
        first_loss.get_or_insert(loss);
        if loss < best.0 {
            best = (loss, params.clone());
        }
        schedule.observe(loss);
    }

    let counts = set.class_counts();
    Ok(ClassifierModel {
        scheme,
        n_classes: n,
        dim,
        params: Params::Mlp(best.1),
        class_priors: super::smoothed_priors(&counts),
        meta: TrainingMeta {
            epochs: config.epochs,
            seed,
            first_epoch_loss: first_loss.unwrap_or(f64::INFINITY),
            final_loss: best.0,
            absent_classes: (0..n).filter(|&c| !present[c]).collect(),
        },
        present,
    })
}
