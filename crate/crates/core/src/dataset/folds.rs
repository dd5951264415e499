use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::{seeds, Error, Result};

/// Assignment of example ids to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    fold_count: usize,
    assignment: BTreeMap<String, usize>,
    /// Seed the plan was drawn with; `None` for imported plans.
    seed: Option<u64>,
}

/// Uniformly shuffles `ids` and deals them round-robin into `fold_count`
/// folds, so fold sizes differ by at most one.
pub fn make_folds<S: AsRef<str>>(ids: &[S], fold_count: usize, seed: u64) -> Result<FoldPlan> {
    let n = ids.len();
    if fold_count < 2 || fold_count > n {
        return Err(Error::InvalidConfig(alloc::format!(
            "fold count {fold_count} must lie in [2, {n}]"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeds::rng(seed));
    let mut assignment = BTreeMap::new();
    for (pos, &i) in order.iter().enumerate() {
        let id = ids[i].as_ref().to_string();
        if assignment.insert(id.clone(), pos % fold_count).is_some() {
            return Err(Error::DuplicateId(id));
        }
    }
    Ok(FoldPlan {
        fold_count,
        assignment,
        seed: Some(seed),
    })
}

impl FoldPlan {
    /// Imports an externally defined partition. Fold indices must lie in
    /// `[0, fold_count)` and every fold must be non-empty; sizes may be uneven.
    pub fn from_assignment(fold_count: usize, assignment: BTreeMap<String, usize>) -> Result<Self> {
        if fold_count < 2 {
            return Err(Error::InvalidConfig("fold count must be at least 2".into()));
        }
        let mut sizes = alloc::vec![0usize; fold_count];
        for (id, &f) in &assignment {
            if f >= fold_count {
                return Err(Error::InvalidConfig(alloc::format!(
                    "id `{id}` assigned to fold {f}, expected < {fold_count}"
                )));
            }
            sizes[f] += 1;
        }
        if let Some(f) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidConfig(alloc::format!("fold {f} is empty")));
        }
        Ok(Self {
            fold_count,
            assignment,
            seed: None,
        })
    }

    pub fn fold_count(&self) -> usize {
        self.fold_count
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn assignment(&self) -> &BTreeMap<String, usize> {
        &self.assignment
    }

    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignment.get(id).copied()
    }

    /// Sizes of folds `0..fold_count`.
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.fold_count];
        for &f in self.assignment.values() {
            sizes[f] += 1;
        }
        sizes
    }

    /// Splits dataset positions into (training, test) for `fold`, given the
    /// dataset ids in dataset order. Every id must be covered by the plan.
    pub fn split<S: AsRef<str>>(&self, ids: &[S], fold: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        if ids.len() != self.assignment.len() {
            return Err(Error::Mismatch(alloc::format!(
                "fold plan covers {} ids, dataset has {}",
                self.assignment.len(),
                ids.len()
            )));
        }
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, id) in ids.iter().enumerate() {
            let id = id.as_ref();
            let f = self
                .fold_of(id)
                .ok_or_else(|| Error::Mismatch(alloc::format!("id `{id}` missing from fold plan")))?;
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        Ok((train, test))
    }
}
