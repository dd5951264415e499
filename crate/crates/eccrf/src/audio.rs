//! WAV input, magnitude STFT, annotation masks and the recording-level
//! segmentation pipeline.

use std::path::Path;

use eccrf_core::segmentation::{
    describe_segment, segment, BoundingBox, PixelMask, PixelScorer, Segment, SegmentParams, Spectrogram,
};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StftConfig {
    /// Window length in samples.
    pub window: usize,
    pub hop: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self { window: 512, hop: 256 }
    }
}

/// Interleaved PCM samples scaled to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub channels: usize,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self {
            samples,
            channels: 1,
            sample_rate,
        }
    }

    /// Averages the channels of every frame.
    pub fn downmix(&self) -> Self {
        if self.channels <= 1 {
            return self.clone();
        }
        let c = self.channels as f64;
        let samples = self
            .samples
            .chunks_exact(self.channels)
            .map(|frame| frame.iter().sum::<f64>() / c)
            .collect();
        Self::mono(samples, self.sample_rate)
    }
}

/// Reads 8/16/24/32-bit integer or 32-bit float PCM.
pub fn read_wav(path: &Path) -> Result<Waveform> {
    let reader = hound::WavReader::open(path).map_err(|e| Error::file(path, e))?;
    let spec = reader.spec();
    let samples: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>(),
        hound::SampleFormat::Int => {
            let scale = (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
        }
    }
    .map_err(|e| Error::file(path, e))?;
    Ok(Waveform {
        samples,
        channels: spec.channels as usize,
        sample_rate: spec.sample_rate,
    })
}

/// Writes 16-bit mono PCM; samples are clamped to [-1, 1].
pub fn write_wav(path: &Path, wave: &Waveform) -> Result<()> {
    let spec = hound::WavSpec {
        channels: wave.channels as u16,
        sample_rate: wave.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| Error::file(path, e))?;
    for &s in &wave.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        w.write_sample(v).map_err(|e| Error::file(path, e))?;
    }
    w.finalize().map_err(|e| Error::file(path, e))
}

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// Magnitude STFT with a Hann window: `floor((len - window) / hop) + 1`
/// frames of `window / 2 + 1` bins.
pub fn compute_spectrogram(wave: &Waveform, config: &StftConfig) -> Result<Spectrogram> {
    if wave.channels != 1 {
        return Err(Error::Config(format!(
            "spectrogram input must be mono, got {} channels; downmix first",
            wave.channels
        )));
    }
    let (w, hop) = (config.window, config.hop);
    if w < 2 || hop == 0 {
        return Err(Error::Config("stft window must be at least 2 and hop positive".into()));
    }
    let n = wave.samples.len();
    if n < w {
        return Err(Error::Config(format!("waveform has {n} samples, shorter than the {w}-sample window")));
    }
    let frames = (n - w) / hop + 1;
    let bins = w / 2 + 1;
    let window = hann(w);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(w);
    let mut buf = vec![Complex::new(0.0, 0.0); w];
    let mut magnitudes = Vec::with_capacity(frames * bins);
    for f in 0..frames {
        let start = f * hop;
        for ((b, &s), &h) in buf.iter_mut().zip(&wave.samples[start..start + w]).zip(&window) {
            *b = Complex::new(s * h, 0.0);
        }
        fft.process(&mut buf);
        magnitudes.extend(buf[..bins].iter().map(|c| c.norm()));
    }
    Ok(Spectrogram::new(frames, bins, magnitudes, wave.sample_rate as f64, hop, w)?)
}

/// Reads an annotation mask sized `frames × bins`.
///
/// PNG: x is the frame and y the bin with low frequencies at the bottom;
/// any nonzero luma is foreground. CSV: one line per frame, `bins`
/// comma-separated 0/1 values, no header.
pub fn read_mask(path: &Path, frames: usize, bins: usize) -> Result<PixelMask> {
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let mask = if is_png {
        let img = image::open(path).map_err(|e| Error::file(path, e))?.to_luma8();
        let (wid, hei) = (img.width() as usize, img.height() as usize);
        if (wid, hei) != (frames, bins) {
            return Err(Error::file(
                path,
                format!("mask is {wid}x{hei} pixels, spectrogram needs {frames}x{bins} (frames x bins)"),
            ));
        }
        let mut m = PixelMask::empty(frames, bins);
        for f in 0..frames {
            for b in 0..bins {
                m.set(f, b, img.get_pixel(f as u32, (bins - 1 - b) as u32).0[0] > 0);
            }
        }
        m
    } else {
        let text = crate::io::read_text(path)?;
        let mut cells = Vec::with_capacity(frames * bins);
        let mut rows = 0;
        for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let err = |m: String| Error::Format {
                path: path.to_path_buf(),
                line: k as u64 + 1,
                message: m,
            };
            let before = cells.len();
            for v in line.split(',') {
                match v.trim() {
                    "0" => cells.push(false),
                    "1" => cells.push(true),
                    other => return Err(err(format!("mask values must be 0 or 1, found `{other}`"))),
                }
            }
            if cells.len() - before != bins {
                return Err(err(format!("expected {bins} values, found {}", cells.len() - before)));
            }
            rows += 1;
        }
        if rows != frames {
            return Err(Error::file(path, format!("mask has {rows} rows, spectrogram has {frames} frames")));
        }
        PixelMask::new(frames, bins, cells)?
    };
    Ok(mask)
}

/// Inverse of the PNG layout accepted by [`read_mask`].
pub fn write_mask_png(path: &Path, mask: &PixelMask) -> Result<()> {
    let (frames, bins) = (mask.frames(), mask.bins());
    let img = image::GrayImage::from_fn(frames as u32, bins as u32, |x, y| {
        image::Luma([if mask.get(x as usize, bins - 1 - y as usize) { 255 } else { 0 }])
    });
    img.save(path).map_err(|e| Error::file(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub bounds: BoundingBox,
    pub area: usize,
    pub descriptor: Vec<f64>,
}

/// Per-recording segmentation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingSegments {
    pub id: String,
    pub frames: usize,
    pub bins: usize,
    pub sample_rate: f64,
    pub hop: usize,
    pub window: usize,
    pub segments: Vec<SegmentRecord>,
}

/// Scores the peak-normalized spectrogram and describes segments on the
/// raw magnitudes.
pub fn segment_spectrogram<S: PixelScorer + ?Sized>(
    id: &str,
    spec: &Spectrogram,
    scorer: &S,
    params: &SegmentParams,
) -> Result<RecordingSegments> {
    let found: Vec<Segment> = segment(&spec.normalized(), scorer, params)?;
    let segments = found
        .iter()
        .map(|s| {
            Ok(SegmentRecord {
                bounds: s.bounds,
                area: s.area(),
                descriptor: describe_segment(spec, s)?.to_vec(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(RecordingSegments {
        id: id.to_string(),
        frames: spec.frames(),
        bins: spec.bins(),
        sample_rate: spec.sample_rate,
        hop: spec.hop,
        window: spec.window,
        segments,
    })
}
