use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{oob_with_fallback, ChainOrder, MultiLabelModel, OobScores, ScoreVector};
use crate::dataset::{LabelVocabulary, MlcDataset};
use crate::forest::{ForestConfig, RandomForest};
use crate::{seeds, Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EccConfig {
    /// Number of chains `L`.
    pub chain_count: usize,
    /// Settings of every member forest; `seed` is the master seed.
    pub forest: ForestConfig,
}

impl Default for EccConfig {
    fn default() -> Self {
        Self {
            chain_count: 25,
            forest: ForestConfig::with_trees(25),
        }
    }
}

/// One classifier chain: `forests[j]` predicts class `order[j]` from the
/// input features followed by `j` chain values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub order: ChainOrder,
    pub forests: Vec<RandomForest>,
}

/// Ensemble of classifier chains with random-forest members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EccModel {
    vocabulary: LabelVocabulary,
    input_dim: usize,
    chains: Vec<Chain>,
}

fn bit_column(bits: &[bool]) -> Vec<f64> {
    bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

impl EccModel {
    /// Trains `L` chains. Chain `l` draws its permutation from stream `l` of
    /// the permutation seed; position `j` is trained on `x_i` followed by the
    /// true bits of classes `order[0..j]`, with target bit `order[j]`.
    pub fn train(data: &MlcDataset, config: &EccConfig) -> Result<Self> {
        if config.chain_count == 0 {
            return Err(Error::InvalidConfig("chain_count must be at least 1".into()));
        }
        let x = data.features();
        let labels: Vec<Vec<bool>> = (0..data.classes()).map(|j| data.label_column(j)).collect();
        let train_chain = |l: usize| -> Result<Chain> {
            let perm_seed = seeds::derive(config.forest.seed, &[seeds::TAG_PERMUTATION]);
            let order = ChainOrder::random(data.classes(), &mut seeds::stream_rng(perm_seed, l as u64));
            let mut forests = Vec::with_capacity(order.len());
            let mut inputs = x.clone();
            for (j, &class) in order.as_slice().iter().enumerate() {
                let cfg = ForestConfig {
                    seed: seeds::member_seed(config.forest.seed, l, j),
                    ..config.forest.clone()
                };
                forests.push(RandomForest::train(&inputs, &labels[class], &cfg)?);
                if j + 1 < order.len() {
                    inputs = inputs.with_column(&bit_column(&labels[class]))?;
                }
            }
            Ok(Chain { order, forests })
        };

        #[cfg(feature = "parallel")]
        let chains = {
            use rayon::prelude::*;
            (0..config.chain_count)
                .into_par_iter()
                .map(train_chain)
                .collect::<Result<Vec<_>>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let chains = (0..config.chain_count)
            .map(train_chain)
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            vocabulary: data.vocabulary().clone(),
            input_dim: data.dim(),
            chains,
        })
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    /// Checks that chain position `j` takes `d + j` inputs (0-based `j`).
    pub fn validate(&self) -> Result<()> {
        let c = self.vocabulary.len();
        if self.chains.is_empty() {
            return Err(Error::Mismatch("ECC model has no chains".into()));
        }
        for chain in &self.chains {
            if chain.order.len() != c || chain.forests.len() != c {
                return Err(Error::Mismatch(alloc::format!(
                    "chain covers {} classes, vocabulary has {c}",
                    chain.forests.len()
                )));
            }
            for (j, f) in chain.forests.iter().enumerate() {
                if f.input_dim() != self.input_dim + j {
                    return Err(Error::DimensionMismatch {
                        context: "chain position input",
                        expected: self.input_dim + j,
                        found: f.input_dim(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn strip_bootstrap_records(&mut self) {
        for chain in &mut self.chains {
            chain.forests.iter_mut().for_each(RandomForest::strip_bootstrap_records);
        }
    }

    /// Class probabilities produced by each chain, indexed by class.
    ///
    /// Each position sees the input followed by the probabilities produced
    /// at the earlier positions of the same chain.
    pub fn chain_probabilities(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(x)?;
        let c = self.vocabulary.len();
        self.chains
            .iter()
            .map(|chain| {
                let mut probs = alloc::vec![0.0; c];
                let mut input = x.to_vec();
                for (j, (&class, forest)) in chain.order.as_slice().iter().zip(&chain.forests).enumerate() {
                    let p = forest.predict_proba(&input)?;
                    probs[class] = p;
                    if j + 1 < c {
                        input.push(p);
                    }
                }
                Ok(probs)
            })
            .collect()
    }
}

impl MultiLabelModel for EccModel {
    fn vocabulary(&self) -> &LabelVocabulary {
        &self.vocabulary
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Sum of chain probabilities per class, divided by `L`.
    fn scores(&self, x: &[f64]) -> Result<ScoreVector> {
        let per_chain = self.chain_probabilities(x)?;
        let mut scores = alloc::vec![0.0; self.vocabulary.len()];
        for probs in &per_chain {
            for (s, p) in scores.iter_mut().zip(probs) {
                *s += p;
            }
        }
        let l = self.chains.len() as f64;
        scores.iter_mut().for_each(|s| *s /= l);
        Ok(ScoreVector(scores))
    }

    /// Chain `l`, position `j` is replayed on its own training inputs (`x_i`
    /// plus true earlier bits); the estimates for each class are averaged
    /// over chains.
    fn oob_scores(&self, training: &MlcDataset) -> Result<OobScores> {
        self.check_dataset(training)?;
        let c = self.vocabulary.len();
        let n = training.len();
        let x = training.features();
        let labels: Vec<Vec<bool>> = (0..c).map(|j| training.label_column(j)).collect();
        let mut sums = alloc::vec![alloc::vec![0.0; n]; c];
        let mut uncovered = 0;
        for chain in &self.chains {
            let mut inputs: Matrix = x.clone();
            for (j, (&class, forest)) in chain.order.as_slice().iter().zip(&chain.forests).enumerate() {
                let (est, u) = oob_with_fallback(forest, &inputs, &labels[class])?;
                uncovered += u;
                for (s, e) in sums[class].iter_mut().zip(est) {
                    *s += e;
                }
                if j + 1 < c {
                    inputs = inputs.with_column(&bit_column(&labels[class]))?;
                }
            }
        }
        let l = self.chains.len() as f64;
        for row in &mut sums {
            row.iter_mut().for_each(|s| *s /= l);
        }
        Ok(OobScores {
            scores: sums,
            uncovered,
        })
    }
}
