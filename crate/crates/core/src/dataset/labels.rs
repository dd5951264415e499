use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ordered class names. Index order is the canonical class order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelVocabulary {
    names: Vec<String>,
}

impl LabelVocabulary {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut seen = BTreeSet::new();
        for name in &names {
            if name.is_empty() {
                return Err(Error::InvalidVocabulary("empty label name".into()));
            }
            if name.contains(';') || name.contains(',') {
                return Err(Error::InvalidVocabulary(alloc::format!(
                    "label `{name}` contains a separator character"
                )));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidVocabulary(alloc::format!("duplicate label `{name}`")));
            }
        }
        Ok(Self { names })
    }

    /// Number of classes `c`.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Parses a `;`-separated list of names into a label set.
    pub fn parse_labels(&self, field: &str) -> Result<LabelSet> {
        let mut set = LabelSet::empty(self.len());
        for name in field.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let j = self
                .index_of(name)
                .ok_or_else(|| Error::UnknownLabel(name.to_string()))?;
            set.insert(j);
        }
        Ok(set)
    }

    /// Inverse of [`parse_labels`](Self::parse_labels), in class order.
    pub fn format_labels(&self, set: &LabelSet) -> String {
        let parts: Vec<&str> = set.indices().map(|j| self.names[j].as_str()).collect();
        parts.join(";")
    }
}

impl TryFrom<Vec<String>> for LabelVocabulary {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        Self::new(names)
    }
}

impl From<LabelVocabulary> for Vec<String> {
    fn from(v: LabelVocabulary) -> Self {
        v.names
    }
}

/// A label set `Y ⊆ {0..c}` stored as `c` indicator bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelSet {
    bits: Vec<bool>,
}

impl LabelSet {
    pub fn empty(classes: usize) -> Self {
        Self {
            bits: alloc::vec![false; classes],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn from_indices(classes: usize, indices: &[usize]) -> Result<Self> {
        let mut set = Self::empty(classes);
        for &j in indices {
            if j >= classes {
                return Err(Error::LabelOutOfRange { index: j, classes });
            }
            set.insert(j);
        }
        Ok(set)
    }

    /// Number of classes `c` (the bit width), not the number of members.
    pub fn width(&self) -> usize {
        self.bits.len()
    }

    /// Number of members `|Y|`.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.bits.get(j).copied().unwrap_or(false)
    }

    pub fn insert(&mut self, j: usize) {
        self.bits[j] = true;
    }

    pub fn set(&mut self, j: usize, value: bool) {
        self.bits[j] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Member indices in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j)
    }

    /// Size of the symmetric difference with `other`.
    pub fn symmetric_difference(&self, other: &Self) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }
}
