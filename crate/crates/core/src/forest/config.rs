use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How many features are considered at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSubset {
    /// `ceil(sqrt(d))`.
    Sqrt,
    /// Every feature.
    All,
    /// A fixed count, clamped to `d`.
    Count(usize),
}

impl FeatureSubset {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            FeatureSubset::Sqrt => {
                let mut m = 1;
                while m * m < d {
                    m += 1;
                }
                m.min(d)
            }
            FeatureSubset::All => d,
            FeatureSubset::Count(k) => k.clamp(1, d.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub tree_count: usize,
    pub max_depth: usize,
    /// Minimum bootstrap-weighted sample count in each child of a split.
    pub min_leaf: usize,
    pub features_per_split: FeatureSubset,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            tree_count: 25,
            max_depth: 15,
            min_leaf: 1,
            features_per_split: FeatureSubset::Sqrt,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn with_trees(tree_count: usize) -> Self {
        Self {
            tree_count,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tree_count == 0 {
            return Err(Error::InvalidConfig("tree_count must be at least 1".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidConfig("max_depth must be at least 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidConfig("min_leaf must be at least 1".into()));
        }
        if self.features_per_split == FeatureSubset::Count(0) {
            return Err(Error::InvalidConfig("features_per_split must be positive".into()));
        }
        Ok(())
    }
}
