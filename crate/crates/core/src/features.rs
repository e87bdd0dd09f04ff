use crate::dataset::EmbeddingStore;

/// Anything that maps a sample id to a feature vector.
pub trait FeatureSpace: Sync {
    fn dim(&self) -> usize;
    fn row(&self, id: usize) -> &[f64];
}

impl FeatureSpace for EmbeddingStore {
    fn dim(&self) -> usize {
        EmbeddingStore::dim(self)
    }

    fn row(&self, id: usize) -> &[f64] {
        EmbeddingStore::row(self, id)
    }
}

/// Dense row-major matrix indexed by sample id, e.g. hidden activations.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim));
        Self { dim, data }
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.dim
    }
}

impl FeatureSpace for FeatureMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn row(&self, id: usize) -> &[f64] {
        &self.data[id * self.dim..(id + 1) * self.dim]
    }
}

/// Either the frozen embeddings or a model-specific projection of them.
pub enum Features<'a> {
    Frozen(&'a EmbeddingStore),
    Projected(FeatureMatrix),
}

impl FeatureSpace for Features<'_> {
    fn dim(&self) -> usize {
        match self {
            Features::Frozen(s) => s.dim(),
            Features::Projected(m) => m.dim,
        }
    }

    fn row(&self, id: usize) -> &[f64] {
        match self {
            Features::Frozen(s) => s.row(id),
            Features::Projected(m) => FeatureSpace::row(m, id),
        }
    }
}

/// Euclidean distance.
#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}
