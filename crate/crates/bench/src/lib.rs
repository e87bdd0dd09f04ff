//! Fixtures shared by the benchmarks.

use albalance_core::classifier::{train_scheme, Scheme, SchemeConfigs};
use albalance_core::synthetic::BlobModel;
use albalance_core::{ClassifierModel, Dataset, PoolState};

/// A long-tailed blob pool with a labeled seed set and a trained model.
pub struct Scenario {
    pub data: Dataset,
    pub pool: PoolState,
    pub model: ClassifierModel,
}

/// `n_classes` classes whose sizes decay geometrically from `head` down to
/// a tenth of it.
pub fn long_tailed(n_classes: usize, head: usize, dim: usize) -> Dataset {
    let counts: Vec<usize> = (0..n_classes)
        .map(|r| {
            let t = r as f64 / (n_classes.max(2) - 1) as f64;
            ((head as f64) * 0.1f64.powf(t)).round().max(1.0) as usize
        })
        .collect();
    BlobModel::new(n_classes, dim, 1.0, 1.0, 1).sample(&counts, 2)
}

pub fn scenario(n_classes: usize, head: usize, dim: usize, labeled: usize) -> Scenario {
    let data = long_tailed(n_classes, head, dim);
    let pool = PoolState::new(data.store.n_samples(), n_classes)
        .seed_initial(labeled, 3, &data.oracle)
        .expect("labeled fits in the pool");
    let mut configs = SchemeConfigs::default();
    configs.svm.epochs = 5;
    let model = train_scheme(Scheme::CsSvm, &data.store, pool.labeled(), &data.oracle, &configs, 4)
        .expect("seed set covers several classes");
    Scenario { data, pool, model }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_shapes() {
        let s = scenario(5, 40, 4, 30);
        assert_eq!(s.pool.n_labeled(), 30);
        assert_eq!(s.data.oracle.class_counts()[0], 40);
        assert_eq!(s.data.oracle.class_counts()[4], 4);
        assert_eq!(s.model.n_classes(), 5);
    }
}
