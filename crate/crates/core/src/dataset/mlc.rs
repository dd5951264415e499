use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_finite, LabelSet, LabelVocabulary};
use crate::{Error, Matrix, Result};

/// One fixed-length feature vector with its label set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlcExample {
    pub id: String,
    pub x: Vec<f64>,
    pub y: LabelSet,
}

/// A validated multi-label dataset. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlcDataset {
    vocabulary: LabelVocabulary,
    dim: usize,
    examples: Vec<MlcExample>,
}

impl MlcDataset {
    /// Validates ids, dimensions, finiteness and label widths.
    ///
    /// The feature dimension is taken from the first example; an empty
    /// dataset has dimension `dim_hint`.
    pub fn new(
        vocabulary: LabelVocabulary,
        examples: Vec<MlcExample>,
        dim_hint: usize,
    ) -> Result<Self> {
        let dim = examples.first().map_or(dim_hint, |e| e.x.len());
        let mut ids = BTreeSet::new();
        for e in &examples {
            if !ids.insert(e.id.as_str()) {
                return Err(Error::DuplicateId(e.id.clone()));
            }
            if e.x.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "example features",
                    expected: dim,
                    found: e.x.len(),
                });
            }
            if e.y.width() != vocabulary.len() {
                return Err(Error::DimensionMismatch {
                    context: "label set width",
                    expected: vocabulary.len(),
                    found: e.y.width(),
                });
            }
            check_finite(&e.x, &format!("example `{}`", e.id))?;
        }
        Ok(Self {
            vocabulary,
            dim,
            examples,
        })
    }

    pub fn vocabulary(&self) -> &LabelVocabulary {
        &self.vocabulary
    }

    /// Number of examples `n`.
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of classes `c`.
    pub fn classes(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn examples(&self) -> &[MlcExample] {
        &self.examples
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.examples.iter().map(|e| e.id.as_str())
    }

    /// Feature rows as a matrix.
    pub fn features(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.len() * self.dim);
        for e in &self.examples {
            data.extend_from_slice(&e.x);
        }
        Matrix::new(self.len(), self.dim, data).expect("validated dimensions")
    }

    /// The bit `Y_i^j` for every example.
    pub fn label_column(&self, j: usize) -> Vec<bool> {
        self.examples.iter().map(|e| e.y.contains(j)).collect()
    }

    /// The examples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            vocabulary: self.vocabulary.clone(),
            dim: self.dim,
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
        }
    }
}
