//! Multi-label loss measures and win-loss aggregation.
//!
//! All five measures are losses (lower is better):
//!
//! - Hamming loss: mean of `|Ŷ Δ Y| / c`.
//! - Subset 0/1 loss: fraction of examples with `Ŷ ≠ Y`.
//! - Rank loss: mean over examples of the fraction of (relevant,
//!   irrelevant) pairs scored in the wrong order, ties counting one half.
//!   Examples with empty or full `Y` contribute 0.
//! - One-error: fraction of examples whose top-scoring class (lowest index
//!   on ties) is not relevant. Empty `Y` counts as an error.
//! - Coverage: mean of `max_{j ∈ Y} rank(j) − 1`, ranks 1-based in
//!   descending score order with ties broken by lowest index. Empty `Y`
//!   contributes 0.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::chains::ScoreVector;
use crate::dataset::LabelSet;
use crate::{Error, Result};

/// Ground truth, scores and predicted set for one example.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub truth: LabelSet,
    pub scores: ScoreVector,
    pub predicted: LabelSet,
}

/// A non-empty batch of predictions over a common class count.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBatch {
    classes: usize,
    entries: Vec<Prediction>,
}

impl PredictionBatch {
    pub fn new(entries: Vec<Prediction>) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::InsufficientData("empty prediction batch".into()))?;
        let classes = first.truth.width();
        for e in &entries {
            for found in [e.truth.width(), e.predicted.width(), e.scores.len()] {
                if found != classes {
                    return Err(Error::DimensionMismatch {
                        context: "prediction batch classes",
                        expected: classes,
                        found,
                    });
                }
            }
            if e.scores.as_slice().iter().any(|s| !s.is_finite()) {
                return Err(Error::NonFinite("prediction scores".into()));
            }
        }
        Ok(Self { classes, entries })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn entries(&self) -> &[Prediction] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn mean(&self, f: impl Fn(&Prediction) -> f64) -> f64 {
        self.entries.iter().map(f).sum::<f64>() / self.entries.len() as f64
    }
}

pub fn hamming_loss(batch: &PredictionBatch) -> f64 {
    let c = batch.classes() as f64;
    batch.mean(|e| e.predicted.symmetric_difference(&e.truth) as f64 / c)
}

pub fn subset_01_loss(batch: &PredictionBatch) -> f64 {
    batch.mean(|e| (e.predicted != e.truth) as u8 as f64)
}

pub fn rank_loss(batch: &PredictionBatch) -> f64 {
    batch.mean(|e| {
        let s = e.scores.as_slice();
        let relevant: Vec<usize> = e.truth.indices().collect();
        let irrelevant: Vec<usize> = (0..s.len()).filter(|&j| !e.truth.contains(j)).collect();
        if relevant.is_empty() || irrelevant.is_empty() {
            return 0.0;
        }
        let mut wrong = 0.0;
        for &a in &relevant {
            for &b in &irrelevant {
                if s[a] < s[b] {
                    wrong += 1.0;
                } else if s[a] == s[b] {
                    wrong += 0.5;
                }
            }
        }
        wrong / (relevant.len() * irrelevant.len()) as f64
    })
}

/// Top-scoring class, lowest index on ties.
fn top_class(scores: &[f64]) -> usize {
    let mut best = 0;
    for (j, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = j;
        }
    }
    best
}

pub fn one_error(batch: &PredictionBatch) -> f64 {
    batch.mean(|e| (!e.truth.contains(top_class(e.scores.as_slice()))) as u8 as f64)
}

pub fn coverage(batch: &PredictionBatch) -> f64 {
    batch.mean(|e| {
        let s = e.scores.as_slice();
        e.truth
            .indices()
            .map(|j| {
                // Number of classes ranked strictly ahead of j.
                (0..s.len())
                    .filter(|&k| s[k] > s[j] || (s[k] == s[j] && k < j))
                    .count()
            })
            .max()
            .unwrap_or(0) as f64
    })
}

/// The five measures, in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    HammingLoss,
    #[serde(rename = "subset_01_loss")]
    Subset01Loss,
    RankLoss,
    OneError,
    Coverage,
}

impl Measure {
    pub const ALL: [Measure; 5] = [
        Measure::HammingLoss,
        Measure::Subset01Loss,
        Measure::RankLoss,
        Measure::OneError,
        Measure::Coverage,
    ];

    /// Machine name used in CSV output.
    pub fn key(self) -> &'static str {
        match self {
            Measure::HammingLoss => "hamming_loss",
            Measure::Subset01Loss => "subset_01_loss",
            Measure::RankLoss => "rank_loss",
            Measure::OneError => "one_error",
            Measure::Coverage => "coverage",
        }
    }

    /// Column title for human-readable tables.
    pub fn title(self) -> &'static str {
        match self {
            Measure::HammingLoss => "Hamming loss",
            Measure::Subset01Loss => "Set 0/1 loss",
            Measure::RankLoss => "Rank loss",
            Measure::OneError => "1-error",
            Measure::Coverage => "Coverage",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.key() == key)
    }
}

/// All five measures on one batch (or a mean of such).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub hamming_loss: f64,
    pub subset_01_loss: f64,
    pub rank_loss: f64,
    pub one_error: f64,
    pub coverage: f64,
    /// Number of evaluated examples.
    pub n: usize,
}

impl MetricsReport {
    pub fn evaluate(batch: &PredictionBatch) -> Self {
        Self {
            hamming_loss: hamming_loss(batch),
            subset_01_loss: subset_01_loss(batch),
            rank_loss: rank_loss(batch),
            one_error: one_error(batch),
            coverage: coverage(batch),
            n: batch.len(),
        }
    }

    pub fn get(&self, m: Measure) -> f64 {
        match m {
            Measure::HammingLoss => self.hamming_loss,
            Measure::Subset01Loss => self.subset_01_loss,
            Measure::RankLoss => self.rank_loss,
            Measure::OneError => self.one_error,
            Measure::Coverage => self.coverage,
        }
    }

    /// Unweighted arithmetic mean of each measure; `n` is summed.
    pub fn mean(reports: &[MetricsReport]) -> Result<Self> {
        if reports.is_empty() {
            return Err(Error::InsufficientData("no reports to average".into()));
        }
        let k = reports.len() as f64;
        let avg = |m: Measure| reports.iter().map(|r| r.get(m)).sum::<f64>() / k;
        Ok(Self {
            hamming_loss: avg(Measure::HammingLoss),
            subset_01_loss: avg(Measure::Subset01Loss),
            rank_loss: avg(Measure::RankLoss),
            one_error: avg(Measure::OneError),
            coverage: avg(Measure::Coverage),
            n: reports.iter().map(|r| r.n).sum(),
        })
    }
}

/// One classifier's record against another.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinLoss {
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
}

impl fmt::Display for WinLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.wins, self.losses)
    }
}

/// Records for every ordered pair of distinct classifiers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WinLossTable {
    records: BTreeMap<(String, String), WinLoss>,
}

impl WinLossTable {
    /// `classifier`'s record against `opponent`.
    pub fn record(&self, classifier: &str, opponent: &str) -> Option<WinLoss> {
        self.records
            .get(&(String::from(classifier), String::from(opponent)))
            .copied()
    }

    /// `((classifier, opponent), record)` in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (&(String, String), &WinLoss)> {
        self.records.iter()
    }
}

/// A summary result to be compared: `(dataset, classifier, report)`.
pub type ResultEntry<'a> = (&'a str, &'a str, &'a MetricsReport);

/// Counts, for every pair of classifiers evaluated on the same dataset, the
/// (dataset, measure) comparisons where each has the strictly lower loss.
/// Equal values are ties and count for neither side.
pub fn win_loss(entries: &[ResultEntry<'_>]) -> Result<WinLossTable> {
    let mut by_dataset: BTreeMap<&str, BTreeMap<&str, &MetricsReport>> = BTreeMap::new();
    for &(dataset, classifier, report) in entries {
        if by_dataset
            .entry(dataset)
            .or_default()
            .insert(classifier, report)
            .is_some()
        {
            return Err(Error::DuplicateId(alloc::format!("{dataset}/{classifier}")));
        }
    }
    let mut table = WinLossTable::default();
    for reports in by_dataset.values() {
        for (&a, ra) in reports {
            for (&b, rb) in reports {
                if a == b {
                    continue;
                }
                let rec = table.records.entry((a.into(), b.into())).or_default();
                for m in Measure::ALL {
                    let (va, vb) = (ra.get(m), rb.get(m));
                    if va < vb {
                        rec.wins += 1;
                    } else if vb < va {
                        rec.losses += 1;
                    } else {
                        rec.ties += 1;
                    }
                }
            }
        }
    }
    Ok(table)
}
