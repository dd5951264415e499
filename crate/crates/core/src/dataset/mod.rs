//! Data model for multi-label (MLC) and multi-instance multi-label (MIML)
//! datasets.

mod folds;
mod labels;
mod miml;
mod mlc;
mod synthetic;

pub use folds::{make_folds, FoldPlan};
pub use labels::{LabelSet, LabelVocabulary};
pub use miml::{MimlBag, MimlDataset};
pub use mlc::{MlcDataset, MlcExample};
pub use synthetic::{generate_synthetic, SyntheticConfig};

use alloc::format;

use crate::{Error, Result};

pub(crate) fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(format!("{what}, component {i}"))),
        None => Ok(()),
    }
}
