//! Acquisition functions: which unlabeled samples to annotate next.
//!
//! | name        | rule                                                         |
//! |-------------|--------------------------------------------------------------|
//! | `random`    | uniform without replacement                                  |
//! | `margin`    | smallest gap between the two most probable classes           |
//! | `coreset`   | greedy k-center against the labeled set                      |
//! | `cds-bal`   | close to a minority centroid, far from the nearest majority |
//! | `?mcs-rand` | minority-class quotas, remainder filled at random            |
//! | `?mcs-marg` | minority-class quotas, remainder filled by margin            |
//!
//! where `?` is `c` (most certain), `u` (most uncertain) or `d` (diverse).
//! Ties are always broken by the lowest sample id.

mod baselines;
mod kcenter;
pub mod mcs;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{ClassifierModel, Top2, TrainError};
use crate::dataset::{EmbeddingStore, PoolState};
use crate::features::Features;

pub use baselines::{af_cds_bal, af_coreset, af_margin, af_random};
pub use kcenter::{greedy_k_center, greedy_k_center_traced};
pub use mcs::{af_mcs, minority_allocation, minority_candidates, select_within_class, MinorityAllocation};

#[derive(Debug, Error, PartialEq)]
pub enum AcquisitionError {
    #[error("acquisition function needs a trained model")]
    MissingModel,
    #[error("acquisition function needs a non-empty labeled set")]
    EmptyLabeledSet,
    #[error("cannot pick {count} centers from {candidates} candidates")]
    CountExceedsCandidates { count: usize, candidates: usize },
    #[error("unknown acquisition function {0:?}")]
    UnknownAcquisition(String),
    #[error("unknown auxiliary acquisition function {0:?} (expected `rand` or `marg`)")]
    UnknownAuxiliary(String),
    #[error(transparent)]
    Model(#[from] TrainError),
}

/// Within-class selection rule of the minority-class family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum McsVariant {
    /// Most certain first (descending margin).
    Cmcs,
    /// Most uncertain first (ascending margin).
    Umcs,
    /// Greedy k-center against the class's labeled samples.
    Dmcs,
}

/// Fills what the minority quotas leave of the batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Auxiliary {
    #[serde(rename = "rand")]
    Random,
    #[serde(rename = "marg")]
    Margin,
}

impl FromStr for Auxiliary {
    type Err = AcquisitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rand" | "random" => Ok(Auxiliary::Random),
            "marg" | "margin" => Ok(Auxiliary::Margin),
            _ => Err(AcquisitionError::UnknownAuxiliary(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AcquisitionKind {
    Random,
    Margin,
    Coreset,
    CdsBal,
    Mcs { variant: McsVariant, auxiliary: Auxiliary },
}

impl AcquisitionKind {
    /// Every accepted configuration name.
    pub const NAMES: [&'static str; 10] = [
        "random",
        "margin",
        "coreset",
        "cds-bal",
        "cmcs-rand",
        "cmcs-marg",
        "umcs-rand",
        "umcs-marg",
        "dmcs-rand",
        "dmcs-marg",
    ];

    pub fn needs_model(self) -> bool {
        matches!(self, AcquisitionKind::Margin | AcquisitionKind::Mcs { .. })
    }
}

impl fmt::Display for AcquisitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AcquisitionKind::Random => f.write_str("random"),
            AcquisitionKind::Margin => f.write_str("margin"),
            AcquisitionKind::Coreset => f.write_str("coreset"),
            AcquisitionKind::CdsBal => f.write_str("cds-bal"),
            AcquisitionKind::Mcs { variant, auxiliary } => {
                let v = match variant {
                    McsVariant::Cmcs => "cmcs",
                    McsVariant::Umcs => "umcs",
                    McsVariant::Dmcs => "dmcs",
                };
                let a = match auxiliary {
                    Auxiliary::Random => "rand",
                    Auxiliary::Margin => "marg",
                };
                write!(f, "{v}-{a}")
            }
        }
    }
}

impl FromStr for AcquisitionKind {
    type Err = AcquisitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => return Ok(AcquisitionKind::Random),
            "margin" => return Ok(AcquisitionKind::Margin),
            "coreset" => return Ok(AcquisitionKind::Coreset),
            "cds-bal" => return Ok(AcquisitionKind::CdsBal),
            _ => {}
        }
        let (head, aux) = s
            .split_once('-')
            .ok_or_else(|| AcquisitionError::UnknownAcquisition(s.to_string()))?;
        let variant = match head {
            "cmcs" => McsVariant::Cmcs,
            "umcs" => McsVariant::Umcs,
            "dmcs" => McsVariant::Dmcs,
            _ => return Err(AcquisitionError::UnknownAcquisition(s.to_string())),
        };
        Ok(AcquisitionKind::Mcs {
            variant,
            auxiliary: aux.parse()?,
        })
    }
}

impl Serialize for AcquisitionKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AcquisitionKind {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which stage of an acquisition function chose a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "stage")]
pub enum Provenance {
    Random,
    Margin,
    Coreset,
    CdsBal,
    /// Chosen for the quota of a minority class.
    Minority {
        class: usize,
    },
    /// Filled by the auxiliary function after the minority quotas.
    Auxiliary {
        auxiliary: Auxiliary,
    },
    /// Random fallback of a function that could not apply its own rule.
    Fallback,
}

/// Ordered batch of distinct unlabeled ids with per-id provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub ids: Vec<usize>,
    pub provenance: Vec<Provenance>,
}

impl SelectionResult {
    fn uniform(ids: Vec<usize>, provenance: Provenance) -> Self {
        let provenance = vec![provenance; ids.len()];
        Self { ids, provenance }
    }

    fn push(&mut self, id: usize, provenance: Provenance) {
        self.ids.push(id);
        self.provenance.push(provenance);
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Everything an acquisition function may look at.
#[derive(Debug, Clone, Copy)]
pub struct AcquisitionContext<'a> {
    pub pool: &'a PoolState,
    pub store: &'a EmbeddingStore,
    /// Model of the active training scheme; absent before the first training.
    pub model: Option<&'a ClassifierModel>,
    /// Requested batch size; truncated to the unlabeled pool.
    pub budget: usize,
    pub seed: u64,
}

impl<'a> AcquisitionContext<'a> {
    pub fn effective_budget(&self) -> usize {
        self.budget.min(self.pool.n_unlabeled())
    }

    fn require_model(&self) -> Result<&'a ClassifierModel, AcquisitionError> {
        self.model.ok_or(AcquisitionError::MissingModel)
    }

    /// Feature space of the active scheme: the model's learned
    /// representation if it has one, else the frozen embeddings.
    pub fn features(&self) -> Features<'a> {
        match self.model.and_then(|m| m.learned_features(self.store)) {
            Some(m) => Features::Projected(m),
            None => Features::Frozen(self.store),
        }
    }

    /// Top-2 prediction of every unlabeled sample, ids ascending.
    pub fn unlabeled_predictions(&self) -> Result<Vec<(usize, Top2)>, AcquisitionError> {
        let model = self.require_model()?;
        let ids = self.pool.unlabeled();
        if model.n_classes() < 2 {
            return Err(TrainError::SingleClassModel.into());
        }
        if model.dim() != self.store.dim() {
            return Err(TrainError::DimensionMismatch {
                expected: model.dim(),
                found: self.store.dim(),
            }
            .into());
        }
        ids.par_iter()
            .map(|&id| Ok((id, model.proba(self.store.row(id)).top2()?)))
            .collect()
    }
}

/// Run the acquisition function `kind`.
pub fn select(kind: AcquisitionKind, ctx: &AcquisitionContext) -> Result<SelectionResult, AcquisitionError> {
    match kind {
        AcquisitionKind::Random => Ok(af_random(ctx)),
        AcquisitionKind::Margin => af_margin(ctx),
        AcquisitionKind::Coreset => af_coreset(ctx),
        AcquisitionKind::CdsBal => Ok(af_cds_bal(ctx)),
        AcquisitionKind::Mcs { variant, auxiliary } => af_mcs(variant, auxiliary, ctx),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse_and_print() {
        for name in AcquisitionKind::NAMES {
            let kind: AcquisitionKind = name.parse().unwrap();
            assert_eq!(kind.to_string(), name);
        }
        assert_eq!(
            "dmcs-rand".parse::<AcquisitionKind>().unwrap(),
            AcquisitionKind::Mcs {
                variant: McsVariant::Dmcs,
                auxiliary: Auxiliary::Random
            }
        );
        assert_eq!(
            "dmcs-entropy".parse::<AcquisitionKind>(),
            Err(AcquisitionError::UnknownAuxiliary("entropy".into()))
        );
        assert!(matches!(
            "badge".parse::<AcquisitionKind>(),
            Err(AcquisitionError::UnknownAcquisition(_))
        ));
    }
}
