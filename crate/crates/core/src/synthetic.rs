//! Gaussian-blob datasets for simulations and tests.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use crate::dataset::{Dataset, EmbeddingStore, LabelOracle};
use crate::rng::{self, Stream};

/// Isotropic Gaussian classes around random centers.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobModel {
    dim: usize,
    centers: Vec<Vec<f64>>,
    noise: f64,
}

impl BlobModel {
    /// `n_classes` centers drawn from `N(0, spread²)` per coordinate;
    /// samples scatter around them with standard deviation `noise`.
    pub fn new(n_classes: usize, dim: usize, spread: f64, noise: f64, seed: u64) -> Self {
        assert!(n_classes > 0 && dim > 0);
        let mut rng = rng::stream_rng(seed, Stream::Synthetic, 0);
        let normal = Normal::new(0.0, spread).expect("finite spread");
        let centers = (0..n_classes)
            .map(|_| (0..dim).map(|_| normal.sample(&mut rng)).collect())
            .collect();
        Self { dim, centers, noise }
    }

    /// Centers given explicitly.
    pub fn with_centers(centers: Vec<Vec<f64>>, noise: f64) -> Self {
        let dim = centers[0].len();
        assert!(centers.iter().all(|c| c.len() == dim));
        Self { dim, centers, noise }
    }

    pub fn n_classes(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    /// Draw `per_class[c]` samples of every class, in shuffled order.
    pub fn sample(&self, per_class: &[usize], seed: u64) -> Dataset {
        assert_eq!(per_class.len(), self.centers.len());
        let mut rng = rng::stream_rng(seed, Stream::Synthetic, 1);
        let mut labels: Vec<usize> = per_class
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
            .collect();
        labels.shuffle(&mut rng);
        let noise = Normal::new(0.0, self.noise).expect("finite noise");
        let mut data = Vec::with_capacity(labels.len() * self.dim);
        for &c in &labels {
            data.extend(self.centers[c].iter().map(|m| m + noise.sample(&mut rng)));
        }
        let store = EmbeddingStore::from_rows(self.dim, data).expect("finite samples");
        let oracle = LabelOracle::new(labels, self.centers.len()).expect("labels in range");
        Dataset::unnamed(store, oracle).expect("aligned rows")
    }
}
