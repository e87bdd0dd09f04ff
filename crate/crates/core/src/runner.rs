//! The iterative active learning loop.
//!
//! For every seed: iteration 0 labels a random batch, then each later
//! iteration runs the acquisition function with the latest model, labels
//! the batch, retrains and evaluates on a balanced test set. Under
//! [`SchemePolicy::AutoSwitch`] both schemes are cross-validated after each
//! iteration while the SVM scheme is active; the first time the softmax
//! head scores strictly higher, the run switches to it for good.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::{self, AcquisitionContext, AcquisitionError, AcquisitionKind, Provenance};
use crate::classifier::{
    cross_validate_scheme, evaluate_balanced, train_scheme, ClassifierModel, Scheme, SchemeConfigs, TrainError,
};
use crate::dataset::{Dataset, DatasetError, EmbeddingStore, LabelOracle, PoolState};
use crate::imbalance::imbalance_ratio;
use crate::rng::{derive_seed, Stream};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid run config: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("budget {budget} exceeds the pool of {pool} samples")]
    BudgetExceedsPool { budget: usize, pool: usize },
    #[error("test set does not match the training data: {0}")]
    TestSet(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
    #[error("cannot aggregate runs: {0}")]
    Aggregate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemePolicy {
    CsSvmOnly,
    SoftmaxThOnly,
    AutoSwitch,
}

impl SchemePolicy {
    fn initial_scheme(self) -> Scheme {
        match self {
            SchemePolicy::SoftmaxThOnly => Scheme::SoftmaxTh,
            SchemePolicy::CsSvmOnly | SchemePolicy::AutoSwitch => Scheme::CsSvm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Total number of labels, including the initial random batch.
    pub budget: usize,
    /// Number of AL iterations, including the initial one.
    pub iterations: usize,
    pub acquisition: AcquisitionKind,
    pub scheme_policy: SchemePolicy,
    pub seeds: Vec<u64>,
    pub training: SchemeConfigs,
}

impl RunConfig {
    pub fn new(budget: usize, iterations: usize, acquisition: AcquisitionKind) -> Self {
        Self {
            budget,
            iterations,
            acquisition,
            scheme_policy: SchemePolicy::CsSvmOnly,
            seeds: vec![0, 1, 2, 3, 4],
            training: SchemeConfigs::default(),
        }
    }

    /// Every problem with the config, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.iterations == 0 {
            out.push("iterations: must be at least 1".to_string());
        }
        if self.budget < self.iterations.max(1) {
            out.push(format!(
                "budget: {} is smaller than the number of iterations",
                self.budget
            ));
        }
        if self.seeds.is_empty() {
            out.push("seeds: at least one seed is required".to_string());
        }
        for (i, seed) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(seed) {
                out.push(format!("seeds: {seed} appears more than once"));
            }
        }
        for (section, cfg) in [("svm", &self.training.svm), ("softmax", &self.training.softmax)] {
            match cfg.validate() {
                Ok(()) => {}
                Err(TrainError::InvalidConfig { field, reason }) => out.push(format!("{section}.{field}: {reason}")),
                Err(e) => out.push(format!("{section}: {e}")),
            }
        }
        out
    }

    /// `⌊b/t⌋` labels per iteration, the remainder going to the last one.
    pub fn batch_sizes(&self) -> Vec<usize> {
        let t = self.iterations.max(1);
        let mut sizes = vec![self.budget / t; t];
        sizes[t - 1] += self.budget % t;
        sizes
    }
}

/// Active scheme and whether the one-way switch has happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwitchState {
    pub active: Scheme,
    pub switched_at: Option<usize>,
}

impl SwitchState {
    pub fn new(policy: SchemePolicy) -> Self {
        Self {
            active: policy.initial_scheme(),
            switched_at: None,
        }
    }
}

/// Switch from the SVM scheme to the softmax scheme the first time the
/// softmax cross-validation score is strictly higher. Never switches back.
pub fn scheme_switch_decision(cv_svm: f64, cv_softmax: f64, state: SwitchState, iteration: usize) -> SwitchState {
    if state.switched_at.is_none() && state.active == Scheme::CsSvm && cv_softmax > cv_svm {
        SwitchState {
            active: Scheme::SoftmaxTh,
            switched_at: Some(iteration),
        }
    } else {
        state
    }
}

/// Source of the per-iteration scheme scores used by the switch.
pub trait SchemeScorer: Sync {
    fn score(&self, request: ScoreRequest<'_>) -> f64;
}

/// What a [`SchemeScorer`] is asked to score.
#[derive(Debug, Clone, Copy)]
pub struct ScoreRequest<'a> {
    pub scheme: Scheme,
    pub iteration: usize,
    pub store: &'a EmbeddingStore,
    pub pool: &'a PoolState,
    pub oracle: &'a LabelOracle,
    pub configs: &'a SchemeConfigs,
    pub seed: u64,
}

/// 80:20 stratified cross-validation; an untrainable scheme scores 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct CrossValidation;

impl SchemeScorer for CrossValidation {
    fn score(&self, r: ScoreRequest<'_>) -> f64 {
        cross_validate_scheme(r.store, r.pool, r.oracle, r.scheme, r.configs, r.seed).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub batch_size: usize,
    pub labeled_count: usize,
    /// Mean per-class test accuracy of the active scheme's model.
    pub accuracy: f64,
    pub labeled_ir: f64,
    pub scheme: Scheme,
    /// False when the active scheme could not be trained (accuracy is 0).
    pub trained: bool,
    pub cv_svm: Option<f64>,
    pub cv_softmax: Option<f64>,
    /// The switch to the softmax scheme happened at this iteration.
    pub switched: bool,
    pub per_class_counts: Vec<usize>,
    pub minority_picks: usize,
    pub auxiliary_picks: usize,
    pub fallback_picks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub normalized_embeddings: bool,
    pub class_names: Vec<String>,
    /// Modelling choices that affect how results compare to other setups.
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub config: RunConfig,
    pub metadata: RunMetadata,
    pub iterations: Vec<IterationRecord>,
}

const NOTES: [&str; 5] = [
    "SOFTMAX_TH is a one-hidden-layer head trained over the frozen embeddings, standing in for CNN fine-tuning",
    "SVM class probabilities are a softmax over one-vs-rest decision values",
    "cds-bal scores samples by the difference of nearest minority and majority centroid distances",
    "minority quotas exceeding the batch are scaled down proportionally",
    "the initial random batch depends only on the seed and is shared across acquisition functions",
];

fn check_test_set(train: &Dataset, test: &Dataset) -> Result<Vec<String>, RunError> {
    if train.store.dim() != test.store.dim() {
        return Err(RunError::TestSet(format!(
            "dimension {} vs {}",
            test.store.dim(),
            train.store.dim()
        )));
    }
    if train.n_classes() != test.n_classes() {
        return Err(RunError::TestSet(format!(
            "{} classes vs {}",
            test.n_classes(),
            train.n_classes()
        )));
    }
    let counts = test.oracle.class_counts();
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(RunError::TestSet(format!("class {c} has no test samples")));
    }
    let mut warnings = Vec::new();
    if counts.iter().any(|&n| n != counts[0]) {
        warnings.push("test set is not balanced; accuracy is still the mean per-class accuracy".into());
    }
    Ok(warnings)
}

/// Run every seed of `config` with cross-validated scheme switching.
pub fn run_experiment(config: &RunConfig, train: &Dataset, test: &Dataset) -> Result<Vec<RunRecord>, RunError> {
    run_experiment_with(config, train, test, &CrossValidation)
}

/// [`run_experiment`] with a custom source of switch scores.
pub fn run_experiment_with(
    config: &RunConfig,
    train: &Dataset,
    test: &Dataset,
    scorer: &dyn SchemeScorer,
) -> Result<Vec<RunRecord>, RunError> {
    let problems = config.problems();
    if !problems.is_empty() {
        return Err(RunError::Config(problems));
    }
    if config.budget > train.store.n_samples() {
        return Err(RunError::BudgetExceedsPool {
            budget: config.budget,
            pool: train.store.n_samples(),
        });
    }
    let warnings = check_test_set(train, test)?;
    let metadata = RunMetadata {
        normalized_embeddings: train.normalized,
        class_names: train.names.class_names.clone(),
        notes: NOTES.iter().map(|s| s.to_string()).collect(),
        warnings,
    };
    config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, train, test, seed, scorer, &metadata))
        .collect()
}

fn run_seed(
    config: &RunConfig,
    train: &Dataset,
    test: &Dataset,
    seed: u64,
    scorer: &dyn SchemeScorer,
    metadata: &RunMetadata,
) -> Result<RunRecord, RunError> {
    let (store, oracle) = (&train.store, &train.oracle);
    let mut pool = PoolState::new(store.n_samples(), oracle.n_classes());
    let mut state = SwitchState::new(config.scheme_policy);
    let mut model: Option<ClassifierModel> = None;
    let mut records = Vec::with_capacity(config.iterations);

    for (k, &batch) in config.batch_sizes().iter().enumerate() {
        let mut provenance = Vec::new();
        pool = if k == 0 {
            pool.seed_initial(batch, derive_seed(seed, Stream::Seeding, 0), oracle)?
        } else {
            let ctx = AcquisitionContext {
                pool: &pool,
                store,
                model: model.as_ref(),
                budget: batch,
                seed: derive_seed(seed, Stream::Acquisition, k as u64),
            };
            let selection = if config.acquisition.needs_model() && model.is_none() {
                let mut s = acquisition::af_random(&ctx);
                s.provenance.iter_mut().for_each(|p| *p = Provenance::Fallback);
                s
            } else {
                acquisition::select(config.acquisition, &ctx)?
            };
            provenance = selection.provenance;
            pool.label_batch(&selection.ids, oracle)?
        }
        .with_iteration(k);

        let (mut cv_svm, mut cv_softmax, mut switched) = (None, None, false);
        if config.scheme_policy == SchemePolicy::AutoSwitch && state.switched_at.is_none() {
            let request = |scheme| ScoreRequest {
                scheme,
                iteration: k,
                store,
                pool: &pool,
                oracle,
                configs: &config.training,
                seed: derive_seed(seed, Stream::CrossValidation, k as u64),
            };
            let svm = scorer.score(request(Scheme::CsSvm));
            let softmax = scorer.score(request(Scheme::SoftmaxTh));
            state = scheme_switch_decision(svm, softmax, state, k);
            switched = state.switched_at == Some(k);
            (cv_svm, cv_softmax) = (Some(svm), Some(softmax));
        }

        model = match train_scheme(
            state.active,
            store,
            pool.labeled(),
            oracle,
            &config.training,
            derive_seed(seed, Stream::Training, k as u64),
        ) {
            Ok(m) => Some(m),
            Err(TrainError::TooFewClasses(_)) => None,
            Err(e) => return Err(e.into()),
        };
        let accuracy = match &model {
            Some(m) => evaluate_balanced(m, &test.store, &test.oracle)?,
            None => 0.0,
        };
        let count = |f: fn(&Provenance) -> bool| provenance.iter().filter(|p| f(p)).count();
        records.push(IterationRecord {
            iteration: k,
            batch_size: batch,
            labeled_count: pool.n_labeled(),
            accuracy,
            labeled_ir: imbalance_ratio(pool.per_class_counts()).map_or(0.0, |s| s.ir),
            scheme: state.active,
            trained: model.is_some(),
            cv_svm,
            cv_softmax,
            switched,
            per_class_counts: pool.per_class_counts().to_vec(),
            minority_picks: count(|p| matches!(p, Provenance::Minority { .. })),
            auxiliary_picks: count(|p| matches!(p, Provenance::Auxiliary { .. })),
            fallback_picks: count(|p| matches!(p, Provenance::Fallback)),
        });
    }

    Ok(RunRecord {
        seed,
        config: config.clone(),
        metadata: metadata.clone(),
        iterations: records,
    })
}

/// One row of the multi-seed curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub iteration: usize,
    pub labeled_count: usize,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub ir_mean: f64,
    pub ir_std: f64,
    /// Active scheme, or `mixed` when seeds disagree.
    pub scheme: String,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-iteration mean and population standard deviation across seeds.
pub fn aggregate_runs(records: &[RunRecord]) -> Result<Vec<AggregatePoint>, RunError> {
    let first = records
        .first()
        .ok_or_else(|| RunError::Aggregate("no records".into()))?;
    let t = first.iterations.len();
    if let Some(r) = records.iter().find(|r| r.iterations.len() != t) {
        return Err(RunError::Aggregate(format!(
            "seed {} has {} iterations, seed {} has {t}",
            r.seed,
            r.iterations.len(),
            first.seed
        )));
    }
    Ok((0..t)
        .map(|k| {
            let acc: Vec<f64> = records.iter().map(|r| r.iterations[k].accuracy).collect();
            let ir: Vec<f64> = records.iter().map(|r| r.iterations[k].labeled_ir).collect();
            let (acc_mean, acc_std) = mean_std(&acc);
            let (ir_mean, ir_std) = mean_std(&ir);
            let scheme = first.iterations[k].scheme;
            let scheme = if records.iter().all(|r| r.iterations[k].scheme == scheme) {
                scheme.name().to_string()
            } else {
                "mixed".to_string()
            };
            AggregatePoint {
                iteration: k,
                labeled_count: first.iterations[k].labeled_count,
                acc_mean,
                acc_std,
                ir_mean,
                ir_std,
                scheme,
            }
        })
        .collect())
}
