use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{oob_with_fallback, MultiLabelModel, OobScores, ScoreVector};
use crate::dataset::{LabelVocabulary, MlcDataset};
use crate::forest::{ForestConfig, RandomForest};
use crate::{seeds, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BrConfig {
    /// Per-class forest settings; `seed` is the master seed.
    pub forest: ForestConfig,
}

impl Default for BrConfig {
    /// 625 trees per class, the same number of voting trees as 25 chains of
    /// 25-tree forests.
    fn default() -> Self {
        Self {
            forest: ForestConfig::with_trees(625),
        }
    }
}

/// Binary relevance: one independent forest per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrModel {
    vocabulary: LabelVocabulary,
    input_dim: usize,
    forests: Vec<RandomForest>,
}

impl BrModel {
    /// Trains forest `j` on `(x_i, Y_i^j)` with seed
    /// `member_seed(seed, 0, j)`.
    pub fn train(data: &MlcDataset, config: &BrConfig) -> Result<Self> {
        let x = data.features();
        let forests = (0..data.classes())
            .map(|j| {
                let cfg = ForestConfig {
                    seed: seeds::member_seed(config.forest.seed, 0, j),
                    ..config.forest.clone()
                };
                RandomForest::train(&x, &data.label_column(j), &cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            vocabulary: data.vocabulary().clone(),
            input_dim: data.dim(),
            forests,
        })
    }

    pub fn forests(&self) -> &[RandomForest] {
        &self.forests
    }

    pub fn validate(&self) -> Result<()> {
        if self.forests.len() != self.vocabulary.len() {
            return Err(Error::Mismatch(alloc::format!(
                "BR model has {} forests for {} classes",
                self.forests.len(),
                self.vocabulary.len()
            )));
        }
        if let Some(f) = self.forests.iter().find(|f| f.input_dim() != self.input_dim) {
            return Err(Error::DimensionMismatch {
                context: "BR forest input",
                expected: self.input_dim,
                found: f.input_dim(),
            });
        }
        Ok(())
    }

    pub fn strip_bootstrap_records(&mut self) {
        self.forests.iter_mut().for_each(RandomForest::strip_bootstrap_records);
    }
}

impl MultiLabelModel for BrModel {
    fn vocabulary(&self) -> &LabelVocabulary {
        &self.vocabulary
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn scores(&self, x: &[f64]) -> Result<ScoreVector> {
        self.check_input(x)?;
        self.forests
            .iter()
            .map(|f| f.predict_proba(x))
            .collect::<Result<Vec<_>>>()
            .map(ScoreVector)
    }

    fn oob_scores(&self, training: &MlcDataset) -> Result<OobScores> {
        self.check_dataset(training)?;
        let x = training.features();
        let mut scores = Vec::with_capacity(self.forests.len());
        let mut uncovered = 0;
        for (j, forest) in self.forests.iter().enumerate() {
            let (s, u) = oob_with_fallback(forest, &x, &training.label_column(j))?;
            scores.push(s);
            uncovered += u;
        }
        Ok(OobScores { scores, uncovered })
    }
}
