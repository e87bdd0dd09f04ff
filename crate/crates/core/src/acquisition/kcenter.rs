use rayon::prelude::*;

use super::AcquisitionError;
use crate::features::{euclidean, FeatureSpace};

/// Below this many candidates distance sweeps stay on the calling thread.
const PARALLEL_SWEEP: usize = 2048;

/// Greedy k-center selection.
///
/// Repeatedly picks the candidate farthest (Euclidean) from its nearest
/// center, where the centers are `anchors` plus every candidate picked so
/// far. Ties go to the lowest id. Without anchors the first pick is the
/// lowest-id candidate.
pub fn greedy_k_center<S: FeatureSpace + ?Sized>(
    candidates: &[usize],
    anchors: &[usize],
    count: usize,
    space: &S,
) -> Result<Vec<usize>, AcquisitionError> {
    Ok(greedy_k_center_traced(candidates, anchors, count, space)?
        .into_iter()
        .map(|(id, _)| id)
        .collect())
}

/// [`greedy_k_center`], also returning each pick's distance to its nearest
/// center at the time it was picked (`inf` for an unanchored first pick).
pub fn greedy_k_center_traced<S: FeatureSpace + ?Sized>(
    candidates: &[usize],
    anchors: &[usize],
    count: usize,
    space: &S,
) -> Result<Vec<(usize, f64)>, AcquisitionError> {
    let mut ids = candidates.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if count > ids.len() {
        return Err(AcquisitionError::CountExceedsCandidates {
            count,
            candidates: ids.len(),
        });
    }
    let parallel = ids.len() >= PARALLEL_SWEEP;

    let nearest_anchor = |id: usize| {
        let x = space.row(id);
        anchors
            .iter()
            .map(|&a| euclidean(x, space.row(a)))
            .fold(f64::INFINITY, f64::min)
    };
    let mut min_dist: Vec<f64> = if parallel {
        ids.par_iter().map(|&id| nearest_anchor(id)).collect()
    } else {
        ids.iter().map(|&id| nearest_anchor(id)).collect()
    };
    let mut taken = vec![false; ids.len()];
    let mut picks = Vec::with_capacity(count);

    for _ in 0..count {
        let mut best: Option<usize> = None;
        for (i, &d) in min_dist.iter().enumerate() {
            if !taken[i] && best.is_none_or(|b| d > min_dist[b]) {
                best = Some(i);
            }
        }
        let best = best.expect("count <= candidates");
        taken[best] = true;
        picks.push((ids[best], min_dist[best]));

        let center = space.row(ids[best]);
        let update = |(d, &id): (&mut f64, &usize)| {
            let nd = euclidean(space.row(id), center);
            if nd < *d {
                *d = nd;
            }
        };
        if parallel {
            min_dist.par_iter_mut().zip(ids.par_iter()).for_each(update);
        } else {
            min_dist.iter_mut().zip(ids.iter()).for_each(update);
        }
    }
    Ok(picks)
}
