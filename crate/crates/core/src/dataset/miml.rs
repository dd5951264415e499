use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_finite, LabelSet, LabelVocabulary};
use crate::{Error, Result};

/// A recording as a bag of segment feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MimlBag {
    pub id: String,
    pub instances: Vec<Vec<f64>>,
    pub y: LabelSet,
}

/// Bags paired with label sets. Bags may be empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MimlDataset {
    vocabulary: LabelVocabulary,
    instance_dim: usize,
    bags: Vec<MimlBag>,
}

impl MimlDataset {
    /// Validates bag ids, instance dimensions and label widths.
    /// `instance_dim` is required because every bag may be empty.
    pub fn new(vocabulary: LabelVocabulary, instance_dim: usize, bags: Vec<MimlBag>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for bag in &bags {
            if !ids.insert(bag.id.as_str()) {
                return Err(Error::DuplicateId(bag.id.clone()));
            }
            if bag.y.width() != vocabulary.len() {
                return Err(Error::DimensionMismatch {
                    context: "label set width",
                    expected: vocabulary.len(),
                    found: bag.y.width(),
                });
            }
            for inst in &bag.instances {
                if inst.len() != instance_dim {
                    return Err(Error::DimensionMismatch {
                        context: "segment features",
                        expected: instance_dim,
                        found: inst.len(),
                    });
                }
                check_finite(inst, &format!("bag `{}`", bag.id))?;
            }
        }
        Ok(Self {
            vocabulary,
            instance_dim,
            bags,
        })
    }

    pub fn vocabulary(&self) -> &LabelVocabulary {
        &self.vocabulary
    }

    pub fn instance_dim(&self) -> usize {
        self.instance_dim
    }

    pub fn bags(&self) -> &[MimlBag] {
        &self.bags
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.bags.iter().map(|b| b.id.as_str())
    }

    /// All instances of all bags, in bag order.
    pub fn pooled_instances(&self) -> Vec<Vec<f64>> {
        self.bags.iter().flat_map(|b| b.instances.iter().cloned()).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            vocabulary: self.vocabulary.clone(),
            instance_dim: self.instance_dim,
            bags: indices.iter().map(|&i| self.bags[i].clone()).collect(),
        }
    }
}
