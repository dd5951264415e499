use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{PixelScorer, ProbabilityMap, Spectrogram};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentParams {
    /// Cells with probability strictly above this are foreground.
    pub prob_threshold: f64,
    /// Components with fewer cells are dropped.
    pub min_pixels: usize,
}

impl Default for SegmentParams {
    fn default() -> Self {
        Self {
            prob_threshold: 0.5,
            min_pixels: 20,
        }
    }
}

/// Inclusive cell ranges covered by a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub frame_start: usize,
    pub frame_end: usize,
    pub bin_start: usize,
    pub bin_end: usize,
}

impl BoundingBox {
    pub fn frames(&self) -> usize {
        self.frame_end - self.frame_start + 1
    }

    pub fn bins(&self) -> usize {
        self.bin_end - self.bin_start + 1
    }
}

/// A 4-connected set of `(frame, bin)` cells, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub pixels: Vec<(usize, usize)>,
    pub bounds: BoundingBox,
}

impl Segment {
    /// Builds a segment from arbitrary cells (connectivity is not checked).
    pub fn from_pixels(mut pixels: Vec<(usize, usize)>) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::InsufficientData("empty segment".into()));
        }
        pixels.sort_unstable();
        pixels.dedup();
        let mut b = BoundingBox {
            frame_start: usize::MAX,
            frame_end: 0,
            bin_start: usize::MAX,
            bin_end: 0,
        };
        for &(f, k) in &pixels {
            b.frame_start = b.frame_start.min(f);
            b.frame_end = b.frame_end.max(f);
            b.bin_start = b.bin_start.min(k);
            b.bin_end = b.bin_end.max(k);
        }
        Ok(Self { pixels, bounds: b })
    }

    pub fn area(&self) -> usize {
        self.pixels.len()
    }
}

/// Thresholds `map`, labels 4-connected foreground components and keeps
/// those with at least `min_pixels` cells, ordered by their first cell in
/// frame-major scan order.
pub fn segments_from_map(map: &ProbabilityMap, params: &SegmentParams) -> Vec<Segment> {
    let (frames, bins) = (map.frames(), map.bins());
    let mut visited = alloc::vec![false; frames * bins];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..frames * bins {
        if visited[start] || !(map.values()[start] > params.prob_threshold) {
            continue;
        }
        visited[start] = true;
        stack.push(start);
        let mut pixels = Vec::new();
        while let Some(cell) = stack.pop() {
            let (f, b) = (cell / bins, cell % bins);
            pixels.push((f, b));
            let mut visit = |nf: usize, nb: usize| {
                let n = nf * bins + nb;
                if !visited[n] && map.values()[n] > params.prob_threshold {
                    visited[n] = true;
                    stack.push(n);
                }
            };
            if f > 0 {
                visit(f - 1, b);
            }
            if f + 1 < frames {
                visit(f + 1, b);
            }
            if b > 0 {
                visit(f, b - 1);
            }
            if b + 1 < bins {
                visit(f, b + 1);
            }
        }
        if pixels.len() >= params.min_pixels.max(1) {
            out.push(Segment::from_pixels(pixels).expect("component is non-empty"));
        }
    }
    out
}

/// Scores every cell with `scorer` and extracts segments.
pub fn segment<S: PixelScorer + ?Sized>(
    spec: &Spectrogram,
    scorer: &S,
    params: &SegmentParams,
) -> Result<Vec<Segment>> {
    let map = scorer.probability_map(spec)?;
    if map.frames() != spec.frames() || map.bins() != spec.bins() {
        return Err(Error::DimensionMismatch {
            context: "probability map cells",
            expected: spec.frames() * spec.bins(),
            found: map.frames() * map.bins(),
        });
    }
    Ok(segments_from_map(&map, params))
}
