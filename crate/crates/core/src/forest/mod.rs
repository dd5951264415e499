//! Random forests of depth-limited binary classification trees.
//!
//! Leaves keep the histogram of (bootstrap-weighted) training targets that
//! reached them, and a forest's probability for class 1 is the mean over
//! trees of `count[1] / (count[0] + count[1])` at the reached leaf. Every
//! tree records its bootstrap multiplicities so out-of-bag estimates can be
//! replayed after training.

mod config;
mod oob;
mod tree;

pub use config::{FeatureSubset, ForestConfig};
pub use oob::OobEstimates;
pub use tree::{DecisionTree, Node};

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{seeds, Error, Matrix, Result};

/// A trained forest together with its bootstrap records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    config: ForestConfig,
    input_dim: usize,
    trees: Vec<DecisionTree>,
    /// Per tree, the multiplicity of each training instance in its bootstrap
    /// sample. Empty when stripped for export.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    in_bag: Vec<Vec<u32>>,
}

impl RandomForest {
    /// Trains `config.tree_count` trees, each on a bootstrap sample of size
    /// `n` drawn with replacement.
    ///
    /// Tree `t` draws from RNG stream `t` of `config.seed`, so the forest is
    /// identical whether trees are grown serially or in parallel.
    pub fn train(features: &Matrix, targets: &[bool], config: &ForestConfig) -> Result<Self> {
        config.validate()?;
        let n = features.rows();
        let d = features.cols();
        if n < 2 {
            return Err(Error::InsufficientData(alloc::format!(
                "a forest needs at least 2 training rows, got {n}"
            )));
        }
        if d == 0 {
            return Err(Error::InsufficientData("a forest needs at least one feature".into()));
        }
        if targets.len() != n {
            return Err(Error::DimensionMismatch {
                context: "forest targets",
                expected: n,
                found: targets.len(),
            });
        }
        let columns = features.to_columns();
        let ctx = tree::TrainingSet {
            columns: &columns,
            rows: n,
            cols: d,
            targets,
        };
        let grow = |t: usize| -> (DecisionTree, Vec<u32>) {
            let mut rng = seeds::stream_rng(config.seed, t as u64);
            let mut in_bag = alloc::vec![0u32; n];
            for _ in 0..n {
                in_bag[rng.random_range(0..n)] += 1;
            }
            let tree = DecisionTree::grow(&ctx, &in_bag, config, &mut rng);
            (tree, in_bag)
        };

        #[cfg(feature = "parallel")]
        let grown: Vec<(DecisionTree, Vec<u32>)> = {
            use rayon::prelude::*;
            (0..config.tree_count).into_par_iter().map(grow).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let grown: Vec<(DecisionTree, Vec<u32>)> = (0..config.tree_count).map(grow).collect();

        let (trees, in_bag) = grown.into_iter().unzip();
        Ok(Self {
            config: config.clone(),
            input_dim: d,
            trees,
            in_bag,
        })
    }

    /// Assembles a forest from parts, e.g. a subset of another forest's trees.
    pub fn from_parts(
        config: ForestConfig,
        input_dim: usize,
        trees: Vec<DecisionTree>,
        in_bag: Vec<Vec<u32>>,
    ) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidConfig("a forest needs at least one tree".into()));
        }
        if !in_bag.is_empty() && in_bag.len() != trees.len() {
            return Err(Error::DimensionMismatch {
                context: "bootstrap records",
                expected: trees.len(),
                found: in_bag.len(),
            });
        }
        Ok(Self {
            config,
            input_dim,
            trees,
            in_bag,
        })
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    /// Feature dimension the forest was trained on.
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn in_bag(&self) -> &[Vec<u32>] {
        &self.in_bag
    }

    pub fn has_bootstrap_records(&self) -> bool {
        !self.in_bag.is_empty()
    }

    /// Drops the bootstrap records; OOB replay is impossible afterwards.
    pub fn strip_bootstrap_records(&mut self) {
        self.in_bag.clear();
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                context: "forest input",
                expected: self.input_dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Probability of class 1: the mean of the per-tree leaf probabilities.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        Ok(sum / self.trees.len() as f64)
    }

    /// Leaf probability of every tree for `x`.
    pub fn tree_probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.trees.iter().map(|t| t.predict(x)).collect())
    }
}
