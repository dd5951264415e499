use alloc::vec::Vec;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{PixelMask, ProbabilityMap, Spectrogram};
use crate::forest::{ForestConfig, RandomForest};
use crate::{seeds, Error, Matrix, Result};

/// Cells on each side of the window center.
pub const WINDOW_RADIUS: usize = 8;
/// Window side length (17).
pub const WINDOW_SIDE: usize = 2 * WINDOW_RADIUS + 1;
/// 17×17 intensities, the frequency row of the center, and the window mean.
pub const PIXEL_FEATURE_DIM: usize = WINDOW_SIDE * WINDOW_SIDE + 2;

/// Writes the features of cell `(frame, bin)` into `out`.
///
/// The window is laid out time-major (outer loop over frames); cells outside
/// the spectrogram read as zero and still count towards the mean.
pub fn pixel_features(spec: &Spectrogram, frame: usize, bin: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), PIXEL_FEATURE_DIM);
    let r = WINDOW_RADIUS as isize;
    let mut k = 0;
    let mut sum = 0.0;
    for dt in -r..=r {
        let f = frame as isize + dt;
        for db in -r..=r {
            let b = bin as isize + db;
            let v = if f >= 0 && b >= 0 && (f as usize) < spec.frames() && (b as usize) < spec.bins() {
                spec.get(f as usize, b as usize)
            } else {
                0.0
            };
            out[k] = v;
            sum += v;
            k += 1;
        }
    }
    out[k] = bin as f64;
    out[k + 1] = sum / (WINDOW_SIDE * WINDOW_SIDE) as f64;
}

/// Anything that can score every cell of a spectrogram.
pub trait PixelScorer {
    fn probability_map(&self, spec: &Spectrogram) -> Result<ProbabilityMap>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmenterConfig {
    pub forest: ForestConfig,
    /// Cells sampled per annotated spectrogram; `None` uses every cell.
    pub samples_per_image: Option<usize>,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            forest: ForestConfig {
                tree_count: 100,
                max_depth: 10,
                ..ForestConfig::default()
            },
            samples_per_image: Some(4000),
        }
    }
}

/// Pixel-window random forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmenter {
    config: SegmenterConfig,
    forest: RandomForest,
}

impl Segmenter {
    /// Trains on spectrograms paired with ground-truth masks.
    pub fn train(annotated: &[(Spectrogram, PixelMask)], config: &SegmenterConfig) -> Result<Self> {
        if annotated.is_empty() {
            return Err(Error::InsufficientData("no annotated spectrograms".into()));
        }
        let mut data = Vec::new();
        let mut targets = Vec::new();
        let mut buf = [0.0; PIXEL_FEATURE_DIM];
        for (i, (spec, mask)) in annotated.iter().enumerate() {
            if mask.frames() != spec.frames() || mask.bins() != spec.bins() {
                return Err(Error::DimensionMismatch {
                    context: "annotation mask cells",
                    expected: spec.frames() * spec.bins(),
                    found: mask.frames() * mask.bins(),
                });
            }
            let cells = spec.frames() * spec.bins();
            let chosen: Vec<usize> = match config.samples_per_image {
                Some(m) if m < cells => {
                    let mut rng = seeds::stream_rng(config.forest.seed, i as u64);
                    let mut v = index::sample(&mut rng, cells, m).into_vec();
                    v.sort_unstable();
                    v
                }
                _ => (0..cells).collect(),
            };
            for cell in chosen {
                let (frame, bin) = (cell / spec.bins(), cell % spec.bins());
                pixel_features(spec, frame, bin, &mut buf);
                data.extend_from_slice(&buf);
                targets.push(mask.get(frame, bin));
            }
        }
        let rows = targets.len();
        let forest = RandomForest::train(&Matrix::new(rows, PIXEL_FEATURE_DIM, data)?, &targets, &config.forest)?;
        Ok(Self {
            config: config.clone(),
            forest,
        })
    }

    pub fn config(&self) -> &SegmenterConfig {
        &self.config
    }

    pub fn forest(&self) -> &RandomForest {
        &self.forest
    }

    pub fn strip_bootstrap_records(&mut self) {
        self.forest.strip_bootstrap_records();
    }
}

impl PixelScorer for Segmenter {
    fn probability_map(&self, spec: &Spectrogram) -> Result<ProbabilityMap> {
        let mut buf = [0.0; PIXEL_FEATURE_DIM];
        let mut values = Vec::with_capacity(spec.frames() * spec.bins());
        for frame in 0..spec.frames() {
            for bin in 0..spec.bins() {
                pixel_features(spec, frame, bin, &mut buf);
                values.push(self.forest.predict_proba(&buf)?);
            }
        }
        ProbabilityMap::new(spec.frames(), spec.bins(), values)
    }
}
