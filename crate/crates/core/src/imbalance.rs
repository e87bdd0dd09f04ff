//! Imbalance ratio statistics and the imbalance-induction procedure.
//!
//! The imbalance ratio of a count vector is `σ / μ`, with `σ` the population
//! standard deviation of the per-class counts and `μ` their mean.

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{EmbeddingStore, LabelOracle, PoolState};
use crate::rng::{self, Stream};

/// Accepted distance between the requested and the induced ratio.
pub const INDUCTION_TOLERANCE: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum ImbalanceError {
    #[error("no classes given")]
    Empty,
    #[error("all class counts are zero")]
    AllZero,
    #[error("empty labeled set")]
    EmptyLabeledSet,
    #[error("invalid induction spec: {0}")]
    InvalidSpec(String),
    #[error("class {class} has {available} samples, fewer than the floor of {min_per_class}")]
    FloorInfeasible {
        class: usize,
        available: usize,
        min_per_class: usize,
    },
    #[error("target ir {target} is outside the reachable range [{min_reachable:.4}, {max_reachable:.4}]")]
    Infeasible {
        target: f64,
        min_reachable: f64,
        max_reachable: f64,
    },
    #[error("target ir {target} not reached within {iterations} iterations (closest {closest:.4})")]
    NotConverged {
        target: f64,
        closest: f64,
        iterations: usize,
    },
    #[error("expected {expected} class counts, got {found}")]
    ClassCountMismatch { expected: usize, found: usize },
    #[error("class {class}: {requested} samples requested, {available} available")]
    CountsExceedAvailability {
        class: usize,
        requested: usize,
        available: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceStats {
    pub per_class: Vec<usize>,
    pub mean: f64,
    pub std: f64,
    pub ir: f64,
}

impl ImbalanceStats {
    pub fn total(&self) -> usize {
        self.per_class.iter().sum()
    }
}

/// Mean, population standard deviation and `σ/μ` of per-class counts.
pub fn imbalance_ratio(per_class: &[usize]) -> Result<ImbalanceStats, ImbalanceError> {
    if per_class.is_empty() {
        return Err(ImbalanceError::Empty);
    }
    let n = per_class.len() as f64;
    let total: usize = per_class.iter().sum();
    if total == 0 {
        return Err(ImbalanceError::AllZero);
    }
    let mean = total as f64 / n;
    let var = per_class
        .iter()
        .map(|&c| {
            let d = c as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    let std = var.sqrt();
    Ok(ImbalanceStats {
        per_class: per_class.to_vec(),
        mean,
        std,
        ir: std / mean,
    })
}

/// Imbalance statistics of the labeled part of a pool; classes without
/// labeled samples count as zero.
pub fn labeled_profile(pool: &PoolState) -> Result<ImbalanceStats, ImbalanceError> {
    if pool.n_labeled() == 0 {
        return Err(ImbalanceError::EmptyLabeledSet);
    }
    imbalance_ratio(pool.per_class_counts())
}

/// Parameters of [`induce_imbalance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InductionSpec {
    pub target_ir: f64,
    pub min_per_class: usize,
    pub rng_seed: u64,
    pub max_iters: usize,
}

impl InductionSpec {
    pub fn new(target_ir: f64, min_per_class: usize, rng_seed: u64) -> Self {
        Self {
            target_ir,
            min_per_class,
            rng_seed,
            max_iters: 100,
        }
    }
}

/// Reduce per-class counts so that their imbalance ratio lands within
/// [`INDUCTION_TOLERANCE`] of `spec.target_ir`.
///
/// Classes are put in a random order (per seed) and the class at rank `r`
/// keeps `count · q^(r/(n-1))` samples, clamped to `[min_per_class, count]`.
/// The tail ratio `q ∈ [0, 1]` is found by bisection.
pub fn induce_imbalance(per_class: &[usize], spec: &InductionSpec) -> Result<Vec<usize>, ImbalanceError> {
    if !spec.target_ir.is_finite() || spec.target_ir < 0.0 {
        return Err(ImbalanceError::InvalidSpec(format!(
            "target_ir must be a non-negative number, got {}",
            spec.target_ir
        )));
    }
    if spec.min_per_class == 0 {
        return Err(ImbalanceError::InvalidSpec("min_per_class must be at least 1".into()));
    }
    let current = imbalance_ratio(per_class)?.ir;
    if let Some((class, &available)) = per_class.iter().enumerate().find(|(_, &c)| c < spec.min_per_class) {
        return Err(ImbalanceError::FloorInfeasible {
            class,
            available,
            min_per_class: spec.min_per_class,
        });
    }
    if (current - spec.target_ir).abs() <= INDUCTION_TOLERANCE {
        return Ok(per_class.to_vec());
    }

    let mut order: Vec<usize> = (0..per_class.len()).collect();
    order.shuffle(&mut rng::stream_rng(spec.rng_seed, Stream::Induction, 0));
    let profile = |q: f64| -> Vec<usize> {
        let span = (per_class.len().max(2) - 1) as f64;
        let mut out = vec![0; per_class.len()];
        for (rank, &class) in order.iter().enumerate() {
            let keep = (per_class[class] as f64 * q.powf(rank as f64 / span)).round() as usize;
            out[class] = keep.clamp(spec.min_per_class, per_class[class]);
        }
        out
    };
    let ir_of = |counts: &[usize]| imbalance_ratio(counts).map(|s| s.ir);

    let steepest = ir_of(&profile(0.0))?;
    if spec.target_ir < current - INDUCTION_TOLERANCE || spec.target_ir > steepest + INDUCTION_TOLERANCE {
        return Err(ImbalanceError::Infeasible {
            target: spec.target_ir,
            min_reachable: current,
            max_reachable: steepest,
        });
    }

    // ir decreases as q grows
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut closest = current;
    for _ in 0..spec.max_iters {
        let mid = 0.5 * (lo + hi);
        let counts = profile(mid);
        let ir = ir_of(&counts)?;
        if (ir - spec.target_ir).abs() < (closest - spec.target_ir).abs() {
            closest = ir;
        }
        if (ir - spec.target_ir).abs() <= INDUCTION_TOLERANCE {
            return Ok(counts);
        }
        if ir > spec.target_ir {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(ImbalanceError::NotConverged {
        target: spec.target_ir,
        closest,
        iterations: spec.max_iters,
    })
}

/// Result of [`prune_dataset`]: the re-densified store and oracle, plus the
/// original ids of the retained samples in their new order.
#[derive(Debug, Clone)]
pub struct Pruned {
    pub store: EmbeddingStore,
    pub oracle: LabelOracle,
    pub kept: Vec<usize>,
}

/// Keep exactly `counts[c]` uniformly chosen samples of every class.
/// Retained samples keep their relative file order.
pub fn prune_dataset(
    store: &EmbeddingStore,
    oracle: &LabelOracle,
    counts: &[usize],
    rng_seed: u64,
) -> Result<Pruned, ImbalanceError> {
    if counts.len() != oracle.n_classes() {
        return Err(ImbalanceError::ClassCountMismatch {
            expected: oracle.n_classes(),
            found: counts.len(),
        });
    }
    let members = oracle.members_by_class();
    let mut rng = rng::stream_rng(rng_seed, Stream::Pruning, 0);
    let mut kept = Vec::with_capacity(counts.iter().sum());
    for (class, (ids, &want)) in members.iter().zip(counts).enumerate() {
        if want > ids.len() {
            return Err(ImbalanceError::CountsExceedAvailability {
                class,
                requested: want,
                available: ids.len(),
            });
        }
        kept.extend(index::sample(&mut rng, ids.len(), want).into_iter().map(|i| ids[i]));
    }
    kept.sort_unstable();
    if kept.is_empty() {
        return Err(ImbalanceError::AllZero);
    }
    let pruned_store = store.select(&kept).expect("oracle and store describe the same samples");
    let labels = kept.iter().map(|&id| oracle.label(id)).collect();
    let pruned_oracle = LabelOracle::new(labels, oracle.n_classes()).expect("labels come from a valid oracle");
    Ok(Pruned {
        store: pruned_store,
        oracle: pruned_oracle,
        kept,
    })
}
