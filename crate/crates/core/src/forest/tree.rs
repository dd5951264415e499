use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ForestConfig;
use crate::{Error, Result};

/// A tree node. Children are indices into the tree's node array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    /// Weighted count of training targets 0 and 1 that reached the leaf.
    Leaf { counts: [u32; 2] },
}

/// A binary classification tree stored as a flat node array rooted at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Node>", into = "Vec<Node>")]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

pub(crate) struct TrainingSet<'a> {
    /// Column-major features.
    pub columns: &'a [f64],
    pub rows: usize,
    pub cols: usize,
    pub targets: &'a [bool],
}

impl TrainingSet<'_> {
    fn value(&self, row: u32, feature: usize) -> f64 {
        self.columns[feature * self.rows + row as usize]
    }
}

struct Grower<'a, 'b, R> {
    set: &'a TrainingSet<'b>,
    config: &'a ForestConfig,
    features_per_split: usize,
    rng: &'a mut R,
    nodes: Vec<Node>,
    feature_order: Vec<usize>,
    candidates: Vec<usize>,
    scratch: Vec<(f64, u32, bool)>,
}

struct Split {
    score: f64,
    feature: usize,
    threshold: f64,
}

fn weighted_counts(set: &TrainingSet<'_>, samples: &[(u32, u32)]) -> [u32; 2] {
    let mut counts = [0u32; 2];
    for &(i, w) in samples {
        counts[set.targets[i as usize] as usize] += w;
    }
    counts
}

impl<R: Rng> Grower<'_, '_, R> {
    fn build(&mut self, samples: &mut [(u32, u32)], depth: usize) -> u32 {
        let counts = weighted_counts(self.set, samples);
        let index = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });
        let total = (counts[0] + counts[1]) as usize;
        if depth >= self.config.max_depth
            || counts[0] == 0
            || counts[1] == 0
            || total < 2 * self.config.min_leaf
        {
            return index as u32;
        }
        let Some(split) = self.best_split(samples, counts) else {
            return index as u32;
        };
        let mut mid = 0;
        for k in 0..samples.len() {
            if self.set.value(samples[k].0, split.feature) <= split.threshold {
                samples.swap(k, mid);
                mid += 1;
            }
        }
        let (left_samples, right_samples) = samples.split_at_mut(mid);
        let left = self.build(left_samples, depth + 1);
        let right = self.build(right_samples, depth + 1);
        self.nodes[index] = Node::Split {
            feature: split.feature as u32,
            threshold: split.threshold,
            left,
            right,
        };
        index as u32
    }

    /// Gini split over a random feature subset. Maximizing
    /// `sum_children (c0^2 + c1^2) / n_child` is equivalent to maximizing the
    /// weighted Gini decrease. Ties go to the lowest feature index, then the
    /// lowest threshold.
    fn best_split(&mut self, samples: &[(u32, u32)], counts: [u32; 2]) -> Option<Split> {
        let d = self.set.cols;
        for i in 0..self.features_per_split {
            let j = self.rng.random_range(i..d);
            self.feature_order.swap(i, j);
        }
        self.candidates.clear();
        self.candidates
            .extend_from_slice(&self.feature_order[..self.features_per_split]);
        self.candidates.sort_unstable();

        let min_leaf = self.config.min_leaf as u32;
        let total = counts[0] + counts[1];
        let mut best: Option<Split> = None;
        for ci in 0..self.candidates.len() {
            let feature = self.candidates[ci];
            self.scratch.clear();
            for &(i, w) in samples {
                self.scratch
                    .push((self.set.value(i, feature), w, self.set.targets[i as usize]));
            }
            self.scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = [0u32; 2];
            for k in 0..self.scratch.len() - 1 {
                let (value, w, y) = self.scratch[k];
                left[y as usize] += w;
                let next = self.scratch[k + 1].0;
                if value >= next {
                    continue;
                }
                let nl = left[0] + left[1];
                let nr = total - nl;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let r0 = (counts[0] - left[0]) as f64;
                let r1 = (counts[1] - left[1]) as f64;
                let l0 = left[0] as f64;
                let l1 = left[1] as f64;
                let score = (l0 * l0 + l1 * l1) / nl as f64 + (r0 * r0 + r1 * r1) / nr as f64;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let mut threshold = value + (next - value) / 2.0;
                    if threshold >= next {
                        threshold = value;
                    }
                    best = Some(Split {
                        score,
                        feature,
                        threshold,
                    });
                }
            }
        }
        best
    }
}

impl DecisionTree {
    pub(crate) fn grow<R: Rng>(
        set: &TrainingSet<'_>,
        in_bag: &[u32],
        config: &ForestConfig,
        rng: &mut R,
    ) -> Self {
        let mut samples: Vec<(u32, u32)> = in_bag
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0)
            .map(|(i, &w)| (i as u32, w))
            .collect();
        let mut grower = Grower {
            set,
            config,
            features_per_split: config.features_per_split.resolve(set.cols),
            rng,
            nodes: Vec::new(),
            feature_order: (0..set.cols).collect(),
            candidates: Vec::new(),
            scratch: Vec::with_capacity(samples.len()),
        };
        grower.build(&mut samples, 0);
        Self {
            nodes: grower.nodes,
        }
    }

    /// Validates child references and leaf totals.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidConfig("a tree needs at least one node".into()));
        }
        for (k, node) in nodes.iter().enumerate() {
            match *node {
                Node::Split {
                    left,
                    right,
                    threshold,
                    ..
                } => {
                    let ok = |c: u32| (c as usize) < nodes.len() && c as usize > k;
                    if !ok(left) || !ok(right) || !threshold.is_finite() {
                        return Err(Error::InvalidConfig(alloc::format!(
                            "tree node {k} has an invalid child or threshold"
                        )));
                    }
                }
                Node::Leaf { counts } => {
                    if counts[0] + counts[1] == 0 {
                        return Err(Error::InvalidConfig(alloc::format!(
                            "tree leaf {k} has an empty histogram"
                        )));
                    }
                }
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Histogram of the leaf `x` falls into.
    pub fn leaf_counts(&self, x: &[f64]) -> [u32; 2] {
        let mut k = 0usize;
        loop {
            match self.nodes[k] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    k = if x[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
                Node::Leaf { counts } => return counts,
            }
        }
    }

    /// Leaf probability of class 1 for `x`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let [c0, c1] = self.leaf_counts(x);
        c1 as f64 / (c0 + c1) as f64
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        let mut deepest = 0;
        let mut stack = alloc::vec![(0usize, 0usize)];
        while let Some((k, depth)) = stack.pop() {
            match self.nodes[k] {
                Node::Split { left, right, .. } => {
                    stack.push((left as usize, depth + 1));
                    stack.push((right as usize, depth + 1));
                }
                Node::Leaf { .. } => deepest = deepest.max(depth),
            }
        }
        deepest
    }
}

impl TryFrom<Vec<Node>> for DecisionTree {
    type Error = Error;

    fn try_from(nodes: Vec<Node>) -> Result<Self> {
        Self::from_nodes(nodes)
    }
}

impl From<DecisionTree> for Vec<Node> {
    fn from(t: DecisionTree) -> Self {
        t.nodes
    }
}
