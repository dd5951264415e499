//! Supervised time-frequency segmentation of magnitude spectrograms.
//!
//! A pixel classifier scores every spectrogram cell from a 17×17 window of
//! intensities around it, the cell's frequency row and the window mean.
//! Cells scoring above a threshold are grouped into 4-connected components;
//! components that are large enough become segments, each summarized by a
//! 12-value descriptor.

mod components;
mod descriptor;
mod pixels;

pub use components::{segment, segments_from_map, BoundingBox, Segment, SegmentParams};
pub use descriptor::{describe_segment, DESCRIPTOR_DIM, DESCRIPTOR_NAMES};
pub use pixels::{
    pixel_features, PixelScorer, Segmenter, SegmenterConfig, PIXEL_FEATURE_DIM, WINDOW_RADIUS,
    WINDOW_SIDE,
};

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Magnitude spectrogram, stored frame-major (`frames × bins`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram {
    frames: usize,
    bins: usize,
    magnitudes: Vec<f64>,
    pub sample_rate: f64,
    pub hop: usize,
    pub window: usize,
}

impl Spectrogram {
    pub fn new(
        frames: usize,
        bins: usize,
        magnitudes: Vec<f64>,
        sample_rate: f64,
        hop: usize,
        window: usize,
    ) -> Result<Self> {
        if magnitudes.len() != frames * bins {
            return Err(Error::DimensionMismatch {
                context: "spectrogram cells",
                expected: frames * bins,
                found: magnitudes.len(),
            });
        }
        if magnitudes.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::NonFinite("spectrogram magnitudes must be finite and >= 0".into()));
        }
        if !(sample_rate > 0.0) || hop == 0 || window == 0 {
            return Err(Error::InvalidConfig("spectrogram timing must be positive".into()));
        }
        Ok(Self {
            frames,
            bins,
            magnitudes,
            sample_rate,
            hop,
            window,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn get(&self, frame: usize, bin: usize) -> f64 {
        self.magnitudes[frame * self.bins + bin]
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    /// Width of one frequency bin in Hz.
    pub fn bin_width(&self) -> f64 {
        self.sample_rate / self.window as f64
    }

    /// Time between consecutive frames in seconds.
    pub fn frame_step(&self) -> f64 {
        self.hop as f64 / self.sample_rate
    }

    /// Copy scaled so the largest magnitude is 1 (unchanged when silent).
    pub fn normalized(&self) -> Self {
        let max = self.magnitudes.iter().cloned().fold(0.0, f64::max);
        let mut out = self.clone();
        if max > 0.0 {
            out.magnitudes.iter_mut().for_each(|m| *m /= max);
        }
        out
    }

    /// Copy with every magnitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.magnitudes.iter_mut().for_each(|m| *m *= factor);
        out
    }
}

/// Boolean grid aligned with a spectrogram (`frames × bins`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelMask {
    frames: usize,
    bins: usize,
    cells: Vec<bool>,
}

impl PixelMask {
    pub fn new(frames: usize, bins: usize, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != frames * bins {
            return Err(Error::DimensionMismatch {
                context: "mask cells",
                expected: frames * bins,
                found: cells.len(),
            });
        }
        Ok(Self { frames, bins, cells })
    }

    pub fn empty(frames: usize, bins: usize) -> Self {
        Self {
            frames,
            bins,
            cells: alloc::vec![false; frames * bins],
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn get(&self, frame: usize, bin: usize) -> bool {
        self.cells[frame * self.bins + bin]
    }

    pub fn set(&mut self, frame: usize, bin: usize, value: bool) {
        self.cells[frame * self.bins + bin] = value;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}

/// Per-cell in-segment probabilities (`frames × bins`).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    frames: usize,
    bins: usize,
    values: Vec<f64>,
}

impl ProbabilityMap {
    pub fn new(frames: usize, bins: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != frames * bins {
            return Err(Error::DimensionMismatch {
                context: "probability map cells",
                expected: frames * bins,
                found: values.len(),
            });
        }
        Ok(Self { frames, bins, values })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn get(&self, frame: usize, bin: usize) -> f64 {
        self.values[frame * self.bins + bin]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
