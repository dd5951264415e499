use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::RandomForest;
use crate::{Error, Matrix, Result};

/// Out-of-bag probabilities for the training instances of a forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OobEstimates {
    /// Mean probability over the trees whose bootstrap excluded instance
    /// `i`; `None` when every tree drew it.
    pub probs: Vec<Option<f64>>,
    /// Number of trees contributing to each estimate.
    pub tree_counts: Vec<u32>,
}

impl OobEstimates {
    pub fn covered(&self, i: usize) -> bool {
        self.probs[i].is_some()
    }

    pub fn uncovered_count(&self) -> usize {
        self.probs.iter().filter(|p| p.is_none()).count()
    }
}

impl RandomForest {
    /// OOB estimates on the forest's own training data.
    ///
    /// `targets` is only used to check that the data has the training size.
    pub fn oob_estimates(&self, features: &Matrix, targets: &[bool]) -> Result<OobEstimates> {
        self.oob_replay(features, targets, |_, _| {})
    }

    /// Like [`oob_estimates`](Self::oob_estimates), additionally returning for
    /// each instance the indices of the trees that contributed to it.
    pub fn oob_estimates_traced(
        &self,
        features: &Matrix,
        targets: &[bool],
    ) -> Result<(OobEstimates, Vec<Vec<usize>>)> {
        let mut contributors = alloc::vec![Vec::new(); features.rows()];
        let est = self.oob_replay(features, targets, |t, i| contributors[i].push(t))?;
        Ok((est, contributors))
    }

    fn oob_replay(
        &self,
        features: &Matrix,
        targets: &[bool],
        mut observe: impl FnMut(usize, usize),
    ) -> Result<OobEstimates> {
        if self.in_bag.is_empty() {
            return Err(Error::Mismatch(
                "forest was exported without bootstrap records; OOB replay impossible".into(),
            ));
        }
        let n = features.rows();
        if targets.len() != n {
            return Err(Error::DimensionMismatch {
                context: "OOB targets",
                expected: n,
                found: targets.len(),
            });
        }
        if let Some(bag) = self.in_bag.iter().find(|b| b.len() != n) {
            return Err(Error::Mismatch(alloc::format!(
                "forest was trained on {} rows, replay data has {n}",
                bag.len()
            )));
        }
        if features.cols() != self.input_dim {
            return Err(Error::DimensionMismatch {
                context: "OOB features",
                expected: self.input_dim,
                found: features.cols(),
            });
        }
        let mut sums = alloc::vec![0.0f64; n];
        let mut tree_counts = alloc::vec![0u32; n];
        for (t, (tree, bag)) in self.trees.iter().zip(&self.in_bag).enumerate() {
            for i in (0..n).filter(|&i| bag[i] == 0) {
                sums[i] += tree.predict(features.row(i));
                tree_counts[i] += 1;
                observe(t, i);
            }
        }
        let probs = sums
            .iter()
            .zip(&tree_counts)
            .map(|(&s, &k)| (k > 0).then(|| s / k as f64))
            .collect();
        Ok(OobEstimates { probs, tree_counts })
    }
}
