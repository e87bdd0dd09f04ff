use rand::seq::index;

use super::{greedy_k_center, AcquisitionContext, AcquisitionError, Provenance, SelectionResult};
use crate::features::euclidean;
use crate::rng;

/// `k` ids drawn uniformly without replacement from `ids`.
pub(crate) fn random_subset(ids: &[usize], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng::seeded(seed);
    index::sample(&mut rng, ids.len(), k.min(ids.len()))
        .into_iter()
        .map(|i| ids[i])
        .collect()
}

/// Sort `(id, key)` pairs by ascending key, then id, and keep the ids.
pub(crate) fn ascending_by(mut scored: Vec<(usize, f64)>, k: usize) -> Vec<usize> {
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    scored.into_iter().take(k).map(|(id, _)| id).collect()
}

pub fn af_random(ctx: &AcquisitionContext) -> SelectionResult {
    let ids = random_subset(&ctx.pool.unlabeled(), ctx.effective_budget(), ctx.seed);
    SelectionResult::uniform(ids, Provenance::Random)
}

/// The unlabeled samples with the smallest top-2 probability margin.
pub fn af_margin(ctx: &AcquisitionContext) -> Result<SelectionResult, AcquisitionError> {
    let scored = ctx
        .unlabeled_predictions()?
        .into_iter()
        .map(|(id, t)| (id, t.margin))
        .collect();
    let ids = ascending_by(scored, ctx.effective_budget());
    Ok(SelectionResult::uniform(ids, Provenance::Margin))
}

/// Greedy k-center over the unlabeled pool, anchored at the labeled set, in
/// the active scheme's feature space.
pub fn af_coreset(ctx: &AcquisitionContext) -> Result<SelectionResult, AcquisitionError> {
    if ctx.pool.n_labeled() == 0 {
        return Err(AcquisitionError::EmptyLabeledSet);
    }
    let features = ctx.features();
    let ids = greedy_k_center(
        &ctx.pool.unlabeled(),
        ctx.pool.labeled(),
        ctx.effective_budget(),
        &features,
    )?;
    Ok(SelectionResult::uniform(ids, Provenance::Coreset))
}

fn centroid(ids: &[usize], ctx: &AcquisitionContext) -> Vec<f64> {
    let mut c = vec![0.0; ctx.store.dim()];
    for &id in ids {
        for (a, b) in c.iter_mut().zip(ctx.store.row(id)) {
            *a += b;
        }
    }
    c.iter_mut().for_each(|v| *v /= ids.len() as f64);
    c
}

/// Score `d(x, nearest minority centroid) − d(x, nearest majority centroid)`
/// in the frozen embedding space; lowest scores first. Classes below the
/// mean labeled count are minority, the rest majority. Falls back to random
/// selection when either group has no centroid.
pub fn af_cds_bal(ctx: &AcquisitionContext) -> SelectionResult {
    let counts = ctx.pool.per_class_counts();
    let mean = ctx.pool.n_labeled() as f64 / counts.len() as f64;
    let by_class = ctx.pool.labeled_by_class();
    let (mut minority, mut majority) = (Vec::new(), Vec::new());
    for (members, &count) in by_class.iter().zip(counts) {
        if count == 0 {
            continue;
        }
        let c = centroid(members, ctx);
        if (count as f64) < mean {
            minority.push(c);
        } else {
            majority.push(c);
        }
    }
    if minority.is_empty() || majority.is_empty() {
        let mut out = super::af_random(ctx);
        out.provenance.iter_mut().for_each(|p| *p = Provenance::Fallback);
        return out;
    }

    let nearest =
        |x: &[f64], centroids: &[Vec<f64>]| centroids.iter().map(|c| euclidean(x, c)).fold(f64::INFINITY, f64::min);
    let scored = ctx
        .pool
        .unlabeled()
        .into_iter()
        .map(|id| {
            let x = ctx.store.row(id);
            (id, nearest(x, &minority) - nearest(x, &majority))
        })
        .collect();
    let ids = ascending_by(scored, ctx.effective_budget());
    SelectionResult::uniform(ids, Provenance::CdsBal)
}
