use rand::seq::SliceRandom;

use super::{train_scheme, ClassifierModel, Scheme, SchemeConfigs, TrainError};
use crate::apportion::largest_remainder;
use crate::dataset::{EmbeddingStore, LabelOracle, PoolState};
use crate::rng::{self, Stream};

/// Recall of every class; `None` for classes absent from `truth`.
pub fn per_class_recall(predicted: &[usize], truth: &[usize], n_classes: usize) -> Vec<Option<f64>> {
    let mut hits = vec![0usize; n_classes];
    let mut totals = vec![0usize; n_classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        totals[t] += 1;
        if p == t {
            hits[t] += 1;
        }
    }
    hits.iter()
        .zip(&totals)
        .map(|(&h, &t)| (t > 0).then(|| h as f64 / t as f64))
        .collect()
}

/// Mean per-class accuracy. Every class must occur in `truth`.
pub fn balanced_accuracy(predicted: &[usize], truth: &[usize], n_classes: usize) -> Result<f64, TrainError> {
    let recall = per_class_recall(predicted, truth, n_classes);
    let mut sum = 0.0;
    for (c, r) in recall.iter().enumerate() {
        sum += r.ok_or(TrainError::ClassAbsent(c))?;
    }
    Ok(sum / n_classes as f64)
}

/// Mean per-class accuracy of `model` on a labeled test set.
pub fn evaluate_balanced(
    model: &ClassifierModel,
    store: &EmbeddingStore,
    oracle: &LabelOracle,
) -> Result<f64, TrainError> {
    let ids: Vec<usize> = (0..oracle.n_samples()).collect();
    let predicted = model.predict(store, &ids)?;
    balanced_accuracy(&predicted, oracle.labels(), oracle.n_classes())
}

/// Split the labeled ids 80:20, stratified by class. The held-out size is
/// `⌊s/5⌋`, shared among classes by largest-remainder rounding.
/// Returns `(train, held_out)`, each ascending.
pub fn stratified_split(pool: &PoolState, oracle: &LabelOracle, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut by_class = vec![Vec::new(); oracle.n_classes()];
    let mut labeled = pool.labeled().to_vec();
    labeled.sort_unstable();
    for id in labeled {
        by_class[oracle.label(id)].push(id);
    }
    let total = pool.n_labeled();
    let held_total = total / 5;
    let shares: Vec<f64> = by_class
        .iter()
        .map(|m| m.len() as f64 * held_total as f64 / total.max(1) as f64)
        .collect();
    let quotas = largest_remainder(&shares, held_total);

    let mut rng = rng::stream_rng(seed, Stream::CrossValidation, 0);
    let (mut train, mut held) = (Vec::new(), Vec::new());
    for (mut members, quota) in by_class.into_iter().zip(quotas) {
        members.shuffle(&mut rng);
        held.extend_from_slice(&members[..quota]);
        train.extend_from_slice(&members[quota..]);
    }
    train.sort_unstable();
    held.sort_unstable();
    (train, held)
}

/// Train `scheme` on a stratified 80% of the labeled set and return its mean
/// per-class accuracy on the remaining 20%, over the classes present there.
pub fn cross_validate_scheme(
    store: &EmbeddingStore,
    pool: &PoolState,
    oracle: &LabelOracle,
    scheme: Scheme,
    configs: &SchemeConfigs,
    seed: u64,
) -> Result<f64, TrainError> {
    let (train, held) = stratified_split(pool, oracle, seed);
    let truth: Vec<usize> = held.iter().map(|&id| oracle.label(id)).collect();
    let recall_classes = {
        let mut seen = vec![false; oracle.n_classes()];
        truth.iter().for_each(|&c| seen[c] = true);
        seen.iter().filter(|&&s| s).count()
    };
    if recall_classes < 2 {
        return Err(TrainError::FoldDegenerate(format!(
            "held-out fold of {} samples covers {recall_classes} class(es)",
            held.len()
        )));
    }
    let model = train_scheme(scheme, store, &train, oracle, configs, seed).map_err(|e| match e {
        TrainError::TooFewClasses(n) => TrainError::FoldDegenerate(format!("training fold covers {n} class(es)")),
        other => other,
    })?;
    let predicted = model.predict(store, &held)?;
    let recall = per_class_recall(&predicted, &truth, oracle.n_classes());
    let present: Vec<f64> = recall.into_iter().flatten().collect();
    Ok(present.iter().sum::<f64>() / present.len() as f64)
}
