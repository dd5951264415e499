use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{MultiLabelModel, OobScores, ScoreVector};
use crate::dataset::{LabelSet, MlcDataset};
use crate::{Error, Result};

/// Number of candidate thresholds: `0.001, 0.002, ..., 0.999`.
pub const GRID_STEPS: usize = 999;

/// The calibration grid, `k / 1000` for `k = 1..=999`.
pub fn threshold_grid() -> impl Iterator<Item = f64> {
    (1..=GRID_STEPS).map(|k| k as f64 / 1000.0)
}

/// Per-class decision thresholds, each in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ThresholdVector(Vec<f64>);

impl ThresholdVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(t) = values.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::InvalidConfig(alloc::format!(
                "threshold {t} outside (0, 1)"
            )));
        }
        Ok(Self(values))
    }

    /// The same threshold for every class.
    pub fn uniform(classes: usize, t: f64) -> Result<Self> {
        Self::new(alloc::vec![t; classes])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ThresholdVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ThresholdVector> for Vec<f64> {
    fn from(t: ThresholdVector) -> Self {
        t.0
    }
}

/// Smallest grid threshold minimizing `sum_i I[I[score_i > t] != label_i]`.
pub fn select_threshold(scores: &[f64], labels: &[bool]) -> f64 {
    let mut best = (usize::MAX, 0.5);
    for t in threshold_grid() {
        let errors = scores
            .iter()
            .zip(labels)
            .filter(|(&s, &y)| (s > t) != y)
            .count();
        if errors < best.0 {
            best = (errors, t);
        }
    }
    best.1
}

/// Thresholds plus the OOB scores they were fitted on.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub thresholds: ThresholdVector,
    pub oob: OobScores,
}

/// Per-class thresholds from out-of-bag scores on the training data.
pub fn calibrate_thresholds<M: MultiLabelModel + ?Sized>(
    model: &M,
    training: &MlcDataset,
) -> Result<Calibration> {
    let oob = model.oob_scores(training)?;
    let values = oob
        .scores
        .iter()
        .enumerate()
        .map(|(j, s)| select_threshold(s, &training.label_column(j)))
        .collect();
    Ok(Calibration {
        thresholds: ThresholdVector::new(values)?,
        oob,
    })
}

/// Bit `j` is set iff `scores[j] > thresholds[j]`.
pub fn predict_set(scores: &ScoreVector, thresholds: &ThresholdVector) -> Result<LabelSet> {
    if scores.len() != thresholds.len() {
        return Err(Error::DimensionMismatch {
            context: "thresholds",
            expected: scores.len(),
            found: thresholds.len(),
        });
    }
    Ok(LabelSet::from_bits(
        scores
            .as_slice()
            .iter()
            .zip(thresholds.as_slice())
            .map(|(s, t)| s > t)
            .collect(),
    ))
}
