use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{LabelSet, LabelVocabulary, MimlBag, MimlDataset};
use crate::{seeds, Error, Result};

/// Side length of the cube cluster centers and noise segments are drawn from.
const FEATURE_RANGE: f64 = 10.0;

/// Parameters of the synthetic correlated-label MIML generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    /// Number of classes.
    #[serde(rename = "c")]
    pub classes: usize,
    /// Number of latent segment clusters shared out among the classes.
    #[serde(rename = "k_true")]
    pub latent_clusters: usize,
    /// Number of bags.
    #[serde(rename = "n")]
    pub bags: usize,
    pub mean_labels_per_bag: f64,
    /// Probability that class `j` copies the bit of class `j - 1`.
    pub label_correlation: f64,
    /// Fraction of segments replaced by uniform noise.
    pub noise_rate: f64,
    pub segment_dim: usize,
    /// Mean number of segments emitted per present label.
    pub segments_per_label: usize,
    /// Standard deviation of segments around their cluster center.
    pub cluster_spread: f64,
    /// Keep empty label sets. Otherwise an empty draw is redrawn from the
    /// chain conditioned on a random anchor class being present.
    pub allow_empty: bool,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            classes: 6,
            latent_clusters: 12,
            bags: 300,
            mean_labels_per_bag: 2.0,
            label_correlation: 0.8,
            noise_rate: 0.1,
            segment_dim: 8,
            segments_per_label: 3,
            cluster_spread: 0.75,
            allow_empty: false,
            seed: 1,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("synthetic: {m}")));
        if self.classes < 2 {
            return bad("c must be at least 2");
        }
        if self.bags < 10 {
            return bad("n must be at least 10");
        }
        if self.latent_clusters == 0 {
            return bad("k_true must be positive");
        }
        if !(1.0..=self.classes as f64).contains(&self.mean_labels_per_bag) {
            return bad("mean_labels_per_bag must lie in [1, c]");
        }
        if !(0.0..=1.0).contains(&self.label_correlation) {
            return bad("label_correlation must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return bad("noise_rate must lie in [0, 1]");
        }
        if self.segment_dim == 0 || self.segments_per_label == 0 {
            return bad("segment_dim and segments_per_label must be positive");
        }
        if !(self.cluster_spread >= 0.0 && self.cluster_spread.is_finite()) {
            return bad("cluster_spread must be finite and non-negative");
        }
        Ok(())
    }

    /// Probability that the label chain with base rate `p` is all zeros.
    fn empty_probability(&self, p: f64) -> f64 {
        let stay = self.label_correlation + (1.0 - self.label_correlation) * (1.0 - p);
        (1.0 - p) * libm::pow(stay, (self.classes - 1) as f64)
    }

    /// Expected label count of the chain conditioned on a uniformly chosen
    /// class being present.
    fn anchored_count(&self, p: f64) -> f64 {
        let c = self.classes;
        let rho = self.label_correlation;
        let mut total = 0.0;
        for s in 0..c {
            for j in 0..c {
                let lag = s.abs_diff(j) as f64;
                total += p + (1.0 - p) * libm::pow(rho, lag);
            }
        }
        total / c as f64
    }

    /// Base rate `p` giving an expected label count of
    /// `mean_labels_per_bag`, counting the redraw of empty sets.
    ///
    /// With strong correlation non-empty sets are long runs, and the target
    /// may lie below the smallest attainable mean; `p` then tends to 0 and
    /// the mean settles at that minimum.
    pub fn base_rate(&self) -> f64 {
        let c = self.classes as f64;
        if self.allow_empty {
            return self.mean_labels_per_bag / c;
        }
        let mean = |p: f64| c * p + self.empty_probability(p) * self.anchored_count(p);
        let (mut lo, mut hi) = (0.0, self.mean_labels_per_bag / c);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mean(mid) < self.mean_labels_per_bag {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if mean(hi) > self.mean_labels_per_bag + 1e-6 {
            log::info!(
                "synthetic: mean of {} labels per bag is unattainable at correlation {}; using {:.3}",
                self.mean_labels_per_bag,
                self.label_correlation,
                mean(hi)
            );
        }
        hi
    }

    /// Latent clusters owned by class `j`.
    pub fn clusters_of(&self, j: usize) -> Vec<usize> {
        if self.latent_clusters >= self.classes {
            (0..self.latent_clusters).filter(|m| m % self.classes == j).collect()
        } else {
            alloc::vec![j % self.latent_clusters]
        }
    }
}

/// Generates a MIML dataset with correlated label sets.
///
/// Label bits follow a stationary two-state chain over class order: class 0
/// is present with probability `p`, and each later class copies its
/// predecessor with probability `label_correlation`, otherwise draws a fresh
/// `Bernoulli(p)`. Every class therefore has marginal `p`, and neighbouring
/// classes have correlation `label_correlation`. Unless `allow_empty` is set,
/// an all-zero draw is replaced by the chain conditioned on a uniformly
/// chosen class being present (the chain is reversible, so this propagates
/// the same copy rule outwards from that class), and `p` is solved so the
/// expected label count stays `mean_labels_per_bag`. Each
/// present class emits segments scattered around the centers of its latent
/// clusters; a `noise_rate` fraction of segments is uniform over the feature
/// cube instead.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<MimlDataset> {
    config.validate()?;
    let mut rng = seeds::rng(config.seed);
    let dim = config.segment_dim;
    let c = config.classes;

    let centers: Vec<Vec<f64>> = (0..config.latent_clusters)
        .map(|_| (0..dim).map(|_| rng.random::<f64>() * FEATURE_RANGE).collect())
        .collect();
    let owned: Vec<Vec<usize>> = (0..c).map(|j| config.clusters_of(j)).collect();
    let spread = Normal::new(0.0, config.cluster_spread)
        .map_err(|e| Error::InvalidConfig(format!("cluster_spread: {e}")))?;
    let p = config.base_rate();

    let mut bags = Vec::with_capacity(config.bags);
    for i in 0..config.bags {
        let mut y = LabelSet::empty(c);
        let mut prev = rng.random_bool(p);
        y.set(0, prev);
        for j in 1..c {
            let bit = if rng.random_bool(config.label_correlation) {
                prev
            } else {
                rng.random_bool(p)
            };
            y.set(j, bit);
            prev = bit;
        }
        if !config.allow_empty && y.count() == 0 {
            let anchor = rng.random_range(0..c);
            y.insert(anchor);
            for j in (anchor + 1..c).chain((0..anchor).rev()) {
                let from = if j > anchor { j - 1 } else { j + 1 };
                let bit = if rng.random_bool(config.label_correlation) {
                    y.contains(from)
                } else {
                    rng.random_bool(p)
                };
                y.set(j, bit);
            }
        }

        let mut instances = Vec::new();
        for j in y.indices().collect::<Vec<_>>() {
            let count = 1 + rng.random_range(0..2 * config.segments_per_label - 1);
            for _ in 0..count {
                let segment = if rng.random_bool(config.noise_rate) {
                    (0..dim).map(|_| rng.random::<f64>() * FEATURE_RANGE).collect()
                } else {
                    let center = &centers[owned[j][rng.random_range(0..owned[j].len())]];
                    center.iter().map(|&m| m + spread.sample(&mut rng)).collect()
                };
                instances.push(segment);
            }
        }
        bags.push(MimlBag {
            id: format!("bag{i:04}"),
            instances,
            y,
        });
    }

    let vocabulary = LabelVocabulary::new((0..c).map(|j| format!("class{j}")))?;
    MimlDataset::new(vocabulary, dim, bags)
}
