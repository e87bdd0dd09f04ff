//! Minority-class oriented sampling.
//!
//! At the start of an iteration with `s` labeled samples over `n` classes,
//! the mean is `μ = s / n` and class `c` with `s_c < μ` is a minority class
//! with quota `m_c = μ − s_c`; every other class gets 0. The candidates for
//! class `c` are the unlabeled samples the latest model predicts as `c`.
//! Each minority class fills its quota from its candidates (most certain,
//! most uncertain or most diverse first), and the auxiliary function fills
//! whatever is left of the batch.

use serde::{Deserialize, Serialize};

use super::baselines::{ascending_by, random_subset};
use super::{
    greedy_k_center, AcquisitionContext, AcquisitionError, Auxiliary, McsVariant, Provenance, SelectionResult,
};
use crate::apportion::largest_remainder;
use crate::classifier::Top2;
use crate::dataset::PoolState;
use crate::features::FeatureSpace;

/// Per-class quotas of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorityAllocation {
    /// Mean labeled samples per class.
    pub mean: f64,
    /// `μ − s_c` for minority classes, 0 otherwise.
    pub raw_quota: Vec<f64>,
    /// `raw_quota` scaled down proportionally when it sums above the budget.
    pub capped_quota: Vec<f64>,
    /// `capped_quota` rounded by largest remainder; sums to
    /// `min(budget, ⌊Σ raw_quota⌋)`.
    pub quota: Vec<usize>,
    pub minority: Vec<bool>,
}

impl MinorityAllocation {
    pub fn from_counts(counts: &[usize], budget: usize) -> Self {
        let total: usize = counts.iter().sum();
        let mean = if counts.is_empty() {
            0.0
        } else {
            total as f64 / counts.len() as f64
        };
        let minority: Vec<bool> = counts.iter().map(|&c| (c as f64) < mean).collect();
        let raw_quota: Vec<f64> = counts
            .iter()
            .zip(&minority)
            .map(|(&c, &m)| if m { mean - c as f64 } else { 0.0 })
            .collect();
        let raw_sum: f64 = raw_quota.iter().sum();
        let capped_quota = if raw_sum > budget as f64 {
            let scale = budget as f64 / raw_sum;
            raw_quota.iter().map(|q| q * scale).collect()
        } else {
            raw_quota.clone()
        };
        let target = ((raw_sum + 1e-9).floor() as usize).min(budget);
        let quota = largest_remainder(&capped_quota, target);
        Self {
            mean,
            raw_quota,
            capped_quota,
            quota,
            minority,
        }
    }

    /// Classes with a positive rounded quota, largest quota first.
    pub fn processing_order(&self) -> Vec<usize> {
        let mut classes: Vec<usize> = (0..self.quota.len()).filter(|&c| self.quota[c] > 0).collect();
        classes.sort_by(|&a, &b| self.quota[b].cmp(&self.quota[a]).then(a.cmp(&b)));
        classes
    }
}

pub fn minority_allocation(pool: &PoolState, budget: usize) -> MinorityAllocation {
    MinorityAllocation::from_counts(pool.per_class_counts(), budget)
}

/// Unlabeled samples whose most probable class is `class`.
pub fn minority_candidates(ctx: &AcquisitionContext, class: usize) -> Result<Vec<usize>, AcquisitionError> {
    Ok(ctx
        .unlabeled_predictions()?
        .into_iter()
        .filter(|(_, t)| t.first == class)
        .map(|(id, _)| id)
        .collect())
}

/// An unlabeled sample predicted as some class, with its top-2 margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub id: usize,
    pub margin: f64,
}

/// Pick up to `quota` of `candidates`. When they do not exceed the quota
/// all of them are returned, ascending, whatever the variant. Otherwise
/// CMCS takes the largest margins, UMCS the smallest, and DMCS runs greedy
/// k-center anchored at `anchors` (the class's labeled samples).
pub fn select_within_class<S: FeatureSpace + ?Sized>(
    variant: McsVariant,
    candidates: &[Candidate],
    quota: usize,
    anchors: &[usize],
    space: &S,
) -> Result<Vec<usize>, AcquisitionError> {
    if candidates.len() <= quota {
        let mut ids: Vec<usize> = candidates.iter().map(|c| c.id).collect();
        ids.sort_unstable();
        return Ok(ids);
    }
    Ok(match variant {
        McsVariant::Cmcs => ascending_by(candidates.iter().map(|c| (c.id, -c.margin)).collect(), quota),
        McsVariant::Umcs => ascending_by(candidates.iter().map(|c| (c.id, c.margin)).collect(), quota),
        McsVariant::Dmcs => {
            let ids: Vec<usize> = candidates.iter().map(|c| c.id).collect();
            greedy_k_center(&ids, anchors, quota, space)?
        }
    })
}

fn candidate_sets(predictions: &[(usize, Top2)], n_classes: usize) -> Vec<Vec<Candidate>> {
    let mut sets = vec![Vec::new(); n_classes];
    for &(id, t) in predictions {
        sets[t.first].push(Candidate { id, margin: t.margin });
    }
    sets
}

/// Minority-class sampling with an auxiliary function for the remainder.
pub fn af_mcs(
    variant: McsVariant,
    auxiliary: Auxiliary,
    ctx: &AcquisitionContext,
) -> Result<SelectionResult, AcquisitionError> {
    let predictions = ctx.unlabeled_predictions()?;
    let budget = ctx.effective_budget();
    let allocation = minority_allocation(ctx.pool, budget);
    let sets = candidate_sets(&predictions, ctx.pool.n_classes());

    let mut out = SelectionResult {
        ids: Vec::with_capacity(budget),
        provenance: Vec::with_capacity(budget),
    };
    let order = allocation.processing_order();
    if !order.is_empty() {
        let features = (variant == McsVariant::Dmcs).then(|| ctx.features());
        let by_class = ctx.pool.labeled_by_class();
        for class in order {
            let picks = match &features {
                Some(f) => select_within_class(variant, &sets[class], allocation.quota[class], &by_class[class], f)?,
                None => select_within_class(variant, &sets[class], allocation.quota[class], &[], ctx.store)?,
            };
            for id in picks {
                out.push(id, Provenance::Minority { class });
            }
        }
    }

    let remainder = budget - out.len();
    if remainder > 0 {
        let mut chosen = vec![false; ctx.pool.n_samples()];
        out.ids.iter().for_each(|&id| chosen[id] = true);
        let fill = match auxiliary {
            Auxiliary::Random => {
                let rest: Vec<usize> = ctx.pool.unlabeled().into_iter().filter(|&id| !chosen[id]).collect();
                random_subset(&rest, remainder, ctx.seed)
            }
            Auxiliary::Margin => {
                let rest = predictions
                    .iter()
                    .filter(|(id, _)| !chosen[*id])
                    .map(|&(id, t)| (id, t.margin))
                    .collect();
                ascending_by(rest, remainder)
            }
        };
        for id in fill {
            out.push(id, Provenance::Auxiliary { auxiliary });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::EmbeddingStore;

    #[test]
    fn allocation_hand_example() {
        let a = MinorityAllocation::from_counts(&[10, 2, 4, 8], 500);
        assert_eq!(a.mean, 6.0);
        assert_eq!(a.raw_quota, vec![0.0, 4.0, 2.0, 0.0]);
        assert_eq!(a.quota, vec![0, 4, 2, 0]);
        assert_eq!(a.minority, vec![false, true, true, false]);
        assert_eq!(a.processing_order(), vec![1, 2]);
    }

    #[test]
    fn balanced_counts_have_no_quota() {
        let a = MinorityAllocation::from_counts(&[7, 7, 7], 100);
        assert!(a.quota.iter().all(|&q| q == 0));
        assert!(a.minority.iter().all(|&m| !m));
    }

    #[test]
    fn capped_allocation_sums_to_budget() {
        // μ = 400, raw = [0, 400, 400, 400, 400]
        let a = MinorityAllocation::from_counts(&[2000, 0, 0, 0, 0], 500);
        let raw: f64 = a.raw_quota.iter().sum();
        assert!((raw - 1600.0).abs() < 1e-9);
        assert_eq!(a.quota.iter().sum::<usize>(), 500);
        assert_eq!(a.quota, vec![0, 125, 125, 125, 125]);

        let b = MinorityAllocation::from_counts(&[1500, 500, 0, 0], 500);
        // μ = 500, raw = [0, 0, 500, 500] → Σ 1000 scaled to 500
        assert_eq!(b.quota, vec![0, 0, 250, 250]);
    }

    #[test]
    fn within_class_rules() {
        let store = EmbeddingStore::from_rows(1, vec![0.0, 1.0, 2.0]).unwrap();
        let cands = [Candidate { id: 0, margin: 0.9 }, Candidate { id: 1, margin: 0.1 }];
        assert_eq!(
            select_within_class(McsVariant::Cmcs, &cands, 1, &[], &store).unwrap(),
            vec![0]
        );
        assert_eq!(
            select_within_class(McsVariant::Umcs, &cands, 1, &[], &store).unwrap(),
            vec![1]
        );
        let three = [
            Candidate { id: 2, margin: 0.5 },
            Candidate { id: 0, margin: 0.9 },
            Candidate { id: 1, margin: 0.1 },
        ];
        for v in [McsVariant::Cmcs, McsVariant::Umcs, McsVariant::Dmcs] {
            assert_eq!(select_within_class(v, &three, 5, &[], &store).unwrap(), vec![0, 1, 2]);
        }
    }
}
