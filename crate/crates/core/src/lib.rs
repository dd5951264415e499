//! Multi-label classification of bags of segment features.
//!
//! The crate is `no_std` with `alloc`. It contains the algorithmic pieces:
//!
//! - [`dataset`]: label vocabularies, label sets, MLC/MIML datasets, fold plans
//!   and a synthetic correlated-label generator.
//! - [`forest`]: depth-limited random forests with leaf label histograms and
//!   out-of-bag estimates.
//! - [`chains`]: binary relevance and ensembles of classifier chains over the
//!   forests, with per-class thresholds calibrated on out-of-bag scores.
//! - [`codebook`]: k-means++ codebooks and histogram-of-segments features.
//! - [`metrics`]: Hamming, subset 0/1, rank loss, one-error, coverage and
//!   win-loss counting.
//! - [`segmentation`]: pixel-window features, connected-component segments
//!   and segment descriptors over magnitude spectrograms.
//!
//! File formats, audio decoding, the cross-validation harness and the CLI live
//! in the companion `eccrf` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod chains;
pub mod codebook;
pub mod dataset;
mod error;
pub mod forest;
mod matrix;
pub mod metrics;
pub mod seeds;
pub mod segmentation;

pub use error::{Error, Result};
pub use matrix::Matrix;
