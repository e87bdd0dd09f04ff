//! Pool-based active learning on imbalanced datasets.
//!
//! The crate simulates iterative annotation over precomputed embeddings:
//! an oracle reveals labels for the samples an acquisition function picks,
//! a classifier is retrained after each batch, and per-iteration accuracy
//! and labeled-set imbalance are recorded.
//!
//! The minority-class oriented acquisition functions ([`acquisition::mcs`])
//! spend each batch on samples predicted as classes whose labeled count is
//! below the per-class mean, and fall back to random or margin sampling for
//! the remainder.

pub mod acquisition;
pub mod apportion;
pub mod classifier;
pub mod dataset;
pub mod features;
pub mod imbalance;
pub mod rng;
pub mod runner;
pub mod synthetic;

pub use acquisition::{AcquisitionContext, AcquisitionKind, Auxiliary, McsVariant, SelectionResult};
pub use classifier::{ClassifierModel, ProbVector, Scheme, SchemeConfigs, TrainConfig};
pub use dataset::{Dataset, EmbeddingStore, LabelOracle, PoolState};
pub use imbalance::{ImbalanceStats, InductionSpec};
pub use runner::{RunConfig, RunRecord, SchemePolicy};
