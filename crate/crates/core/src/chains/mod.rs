//! Binary relevance and ensembles of classifier chains over random forests,
//! with per-class thresholds calibrated on out-of-bag scores.

mod br;
mod ecc;
mod thresholds;

pub use br::{BrConfig, BrModel};
pub use ecc::{Chain, EccConfig, EccModel};
pub use thresholds::{
    calibrate_thresholds, predict_set, select_threshold, threshold_grid, Calibration,
    ThresholdVector, GRID_STEPS,
};

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabelVocabulary, MlcDataset};
use crate::{Error, Result};

/// A permutation of the class indices `0..c`; position `j` of a chain
/// predicts class `order[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ChainOrder(Vec<usize>);

impl ChainOrder {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = alloc::vec![false; order.len()];
        for &j in &order {
            if j >= order.len() || core::mem::replace(&mut seen[j], true) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "{order:?} is not a permutation"
                )));
            }
        }
        Ok(Self(order))
    }

    pub fn identity(classes: usize) -> Self {
        Self((0..classes).collect())
    }

    /// Uniformly random permutation.
    pub fn random<R: Rng>(classes: usize, rng: &mut R) -> Self {
        let mut order: Vec<usize> = (0..classes).collect();
        order.shuffle(rng);
        Self(order)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<usize>> for ChainOrder {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ChainOrder> for Vec<usize> {
    fn from(o: ChainOrder) -> Self {
        o.0
    }
}

/// Per-class confidence scores in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector(pub Vec<f64>);

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Out-of-bag class scores for every training instance, class-major:
/// `scores[j][i]` is the score of class `j` on instance `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct OobScores {
    pub scores: Vec<Vec<f64>>,
    /// How many forest estimates fell back to the full-forest prediction
    /// because no tree left the instance out.
    pub uncovered: usize,
}

/// Which meta-learner to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Br,
    Ecc,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Br => "br",
            ClassifierKind::Ecc => "ecc",
        }
    }
}

/// Common surface of the multi-label models.
pub trait MultiLabelModel {
    fn vocabulary(&self) -> &LabelVocabulary;

    /// Feature dimension `d` of the inputs.
    fn input_dim(&self) -> usize;

    fn scores(&self, x: &[f64]) -> Result<ScoreVector>;

    /// OOB scores on the exact training set of the model.
    fn oob_scores(&self, training: &MlcDataset) -> Result<OobScores>;

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "model input",
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    fn check_dataset(&self, ds: &MlcDataset) -> Result<()> {
        if ds.vocabulary() != self.vocabulary() {
            return Err(Error::Mismatch(alloc::format!(
                "model vocabulary {:?} differs from data vocabulary {:?}",
                self.vocabulary().names(),
                ds.vocabulary().names()
            )));
        }
        if ds.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "dataset features",
                expected: self.input_dim(),
                found: ds.dim(),
            });
        }
        Ok(())
    }
}

/// A trained BR or ECC model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Classifier {
    Br(BrModel),
    Ecc(EccModel),
}

impl Classifier {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Classifier::Br(_) => ClassifierKind::Br,
            Classifier::Ecc(_) => ClassifierKind::Ecc,
        }
    }

    /// Checks structural invariants after deserialization.
    pub fn validate(&self) -> Result<()> {
        match self {
            Classifier::Br(m) => m.validate(),
            Classifier::Ecc(m) => m.validate(),
        }
    }

    pub fn strip_bootstrap_records(&mut self) {
        match self {
            Classifier::Br(m) => m.strip_bootstrap_records(),
            Classifier::Ecc(m) => m.strip_bootstrap_records(),
        }
    }
}

impl MultiLabelModel for Classifier {
    fn vocabulary(&self) -> &LabelVocabulary {
        match self {
            Classifier::Br(m) => m.vocabulary(),
            Classifier::Ecc(m) => m.vocabulary(),
        }
    }

    fn input_dim(&self) -> usize {
        match self {
            Classifier::Br(m) => m.input_dim(),
            Classifier::Ecc(m) => m.input_dim(),
        }
    }

    fn scores(&self, x: &[f64]) -> Result<ScoreVector> {
        match self {
            Classifier::Br(m) => m.scores(x),
            Classifier::Ecc(m) => m.scores(x),
        }
    }

    fn oob_scores(&self, training: &MlcDataset) -> Result<OobScores> {
        match self {
            Classifier::Br(m) => m.oob_scores(training),
            Classifier::Ecc(m) => m.oob_scores(training),
        }
    }
}

/// OOB estimate for each instance, falling back to the full-forest
/// prediction where no tree left the instance out.
pub(crate) fn oob_with_fallback(
    forest: &crate::forest::RandomForest,
    features: &crate::Matrix,
    targets: &[bool],
) -> Result<(Vec<f64>, usize)> {
    let est = forest.oob_estimates(features, targets)?;
    let mut uncovered = 0;
    let mut out = Vec::with_capacity(targets.len());
    for (i, p) in est.probs.iter().enumerate() {
        match p {
            Some(p) => out.push(*p),
            None => {
                uncovered += 1;
                out.push(forest.predict_proba(features.row(i))?);
            }
        }
    }
    if uncovered > 0 {
        log::info!("{uncovered} training instances had no out-of-bag tree; using full-forest predictions");
    }
    Ok((out, uncovered))
}

#[cfg(test)]
mod tests;
