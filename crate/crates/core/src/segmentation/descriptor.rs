use super::{Segment, Spectrogram};
use crate::{Error, Result};

pub const DESCRIPTOR_DIM: usize = 12;

/// Names of the descriptor entries, in order.
pub const DESCRIPTOR_NAMES: [&str; DESCRIPTOR_DIM] = [
    "duration_s",
    "bandwidth_hz",
    "min_frequency_hz",
    "max_frequency_hz",
    "area_pixels",
    "mask_density",
    "total_energy",
    "mean_intensity",
    "time_centroid",
    "frequency_centroid",
    "intensity_std",
    "frequency_entropy",
];

/// Summarizes a segment.
///
/// Frequencies are bin lower edges (`bin * bin_width`), so the bandwidth of
/// a single row is one bin width. Energy is the summed magnitude. Centroids
/// are intensity-weighted cell centers relative to the bounding box, in
/// `[0, 1]`; the frequency entropy (nats) is that of the intensity profile
/// over the segment's rows. A segment of all-zero cells is weighted
/// uniformly.
pub fn describe_segment(spec: &Spectrogram, segment: &Segment) -> Result<[f64; DESCRIPTOR_DIM]> {
    if segment.pixels.is_empty() {
        return Err(Error::InsufficientData("empty segment".into()));
    }
    let b = segment.bounds;
    if b.frame_end >= spec.frames() || b.bin_end >= spec.bins() {
        return Err(Error::DimensionMismatch {
            context: "segment bounds",
            expected: spec.frames() * spec.bins(),
            found: (b.frame_end + 1) * (b.bin_end + 1),
        });
    }
    let area = segment.pixels.len() as f64;
    let intensities = segment.pixels.iter().map(|&(f, k)| spec.get(f, k));
    let energy: f64 = intensities.clone().sum();
    let mean = energy / area;
    let variance = intensities.clone().map(|v| (v - mean) * (v - mean)).sum::<f64>() / area;
    let weight = |v: f64| if energy > 0.0 { v / energy } else { 1.0 / area };

    let (width, height) = (b.frames() as f64, b.bins() as f64);
    let mut time_centroid = 0.0;
    let mut freq_centroid = 0.0;
    let mut profile = alloc::vec![0.0; b.bins()];
    for &(f, k) in &segment.pixels {
        let w = weight(spec.get(f, k));
        time_centroid += w * ((f - b.frame_start) as f64 + 0.5) / width;
        freq_centroid += w * ((k - b.bin_start) as f64 + 0.5) / height;
        profile[k - b.bin_start] += w;
    }
    let entropy = -profile
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * libm::log(p))
        .sum::<f64>();

    let bw = spec.bin_width();
    Ok([
        width * spec.frame_step(),
        height * bw,
        b.bin_start as f64 * bw,
        b.bin_end as f64 * bw,
        area,
        area / (width * height),
        energy,
        mean,
        time_centroid,
        freq_centroid,
        libm::sqrt(variance),
        entropy.max(0.0),
    ])
}
