//! Versioned JSON envelopes for trained models, codebooks and segmenters.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use eccrf_core::chains::{Classifier, ThresholdVector};
use eccrf_core::codebook::{Codebook, CodebookConfig};
use eccrf_core::dataset::{MimlDataset, MlcDataset};
use eccrf_core::segmentation::{SegmentParams, Segmenter};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audio::StftConfig;
use crate::config::ThresholdMode;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const MODEL_FORMAT: &str = "eccrf-model";
pub const CODEBOOK_FORMAT: &str = "eccrf-codebook";
pub const SEGMENTER_FORMAT: &str = "eccrf-segmenter";

fn hex(digest: &[u8]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn hash_str(h: &mut Sha256, s: &str) {
    h.update((s.len() as u64).to_le_bytes());
    h.update(s.as_bytes());
}

fn hash_values(h: &mut Sha256, xs: &[f64]) {
    h.update((xs.len() as u64).to_le_bytes());
    for x in xs {
        h.update(x.to_bits().to_le_bytes());
    }
}

/// SHA-256 over vocabulary, ids, feature bits and label bits.
pub fn fingerprint_mlc(data: &MlcDataset) -> String {
    let mut h = Sha256::new();
    for name in data.vocabulary().names() {
        hash_str(&mut h, name);
    }
    for e in data.examples() {
        hash_str(&mut h, &e.id);
        hash_values(&mut h, &e.x);
        h.update(e.y.bits().iter().map(|&b| b as u8).collect::<Vec<_>>());
    }
    hex(&h.finalize())
}

/// SHA-256 over bag ids and segment feature bits.
pub fn fingerprint_miml(data: &MimlDataset) -> String {
    let mut h = Sha256::new();
    for bag in data.bags() {
        hash_str(&mut h, &bag.id);
        h.update((bag.instances.len() as u64).to_le_bytes());
        for inst in &bag.instances {
            hash_values(&mut h, inst);
        }
    }
    hex(&h.finalize())
}

#[derive(Deserialize)]
struct Envelope {
    format: Option<String>,
    version: Option<u32>,
}

/// Reads a JSON artifact after checking its `format` and `version` fields.
fn load_envelope<T: DeserializeOwned>(path: &Path, expected: &str) -> Result<T> {
    let value: serde_json::Value = load_json(path)?;
    let env = Envelope::deserialize(&value).map_err(|e| Error::file(path, e))?;
    let format = env.format.unwrap_or_default();
    if format != expected {
        return Err(Error::file(path, format!("expected a `{expected}` file, found `{format}`")));
    }
    match env.version {
        Some(FORMAT_VERSION) => {}
        Some(v) => return Err(Error::file(path, format!("unsupported format version {v}"))),
        None => return Err(Error::file(path, "missing format version")),
    }
    T::deserialize(value).map_err(|e| Error::file(path, e))
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, value).map_err(|e| Error::file(path, e))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::file(path, e))
}

/// A trained classifier, optionally with calibrated thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    /// Fingerprint of the training set; calibration must use the same data.
    pub training_fingerprint: String,
    pub threshold_mode: Option<ThresholdMode>,
    pub thresholds: Option<Vec<f64>>,
    pub classifier: Classifier,
}

impl ModelFile {
    pub fn new(classifier: Classifier, training: &MlcDataset) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: FORMAT_VERSION,
            training_fingerprint: fingerprint_mlc(training),
            threshold_mode: None,
            thresholds: None,
            classifier,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: Self = load_envelope(path, MODEL_FORMAT)?;
        m.classifier.validate().map_err(|e| Error::file(path, e))?;
        if let Some(t) = &m.thresholds {
            use eccrf_core::chains::MultiLabelModel;
            let c = m.classifier.vocabulary().len();
            if t.len() != c {
                return Err(Error::file(path, format!("{} thresholds for {c} classes", t.len())));
            }
            ThresholdVector::new(t.clone()).map_err(|e| Error::file(path, e))?;
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_json(path, self)
    }

    /// Calibrated thresholds; an error if the model was never calibrated.
    pub fn threshold_vector(&self) -> Result<ThresholdVector> {
        let t = self
            .thresholds
            .as_ref()
            .ok_or_else(|| Error::Config("model has no thresholds; run `calibrate` first".into()))?;
        Ok(ThresholdVector::new(t.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookFile {
    pub format: String,
    pub version: u32,
    pub k: usize,
    pub dimension: usize,
    pub config: CodebookConfig,
    /// Fingerprint of the segments the codebook was fitted on.
    pub training_fingerprint: String,
    pub codebook: Codebook,
}

impl CodebookFile {
    pub fn new(codebook: Codebook, config: CodebookConfig, training_fingerprint: String) -> Self {
        Self {
            format: CODEBOOK_FORMAT.into(),
            version: FORMAT_VERSION,
            k: codebook.k(),
            dimension: codebook.dim(),
            config,
            training_fingerprint,
            codebook,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f: Self = load_envelope(path, CODEBOOK_FORMAT)?;
        let cb = &f.codebook;
        if cb.k() != f.k || cb.centers().len() != f.k || cb.centers().iter().any(|c| c.len() != f.dimension) {
            return Err(Error::file(path, "codebook centers disagree with `k` or `dimension`"));
        }
        Ok(f)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_json(path, self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmenterFile {
    pub format: String,
    pub version: u32,
    pub stft: StftConfig,
    pub params: SegmentParams,
    pub segmenter: Segmenter,
}

impl SegmenterFile {
    pub fn new(segmenter: Segmenter, stft: StftConfig, params: SegmentParams) -> Self {
        Self {
            format: SEGMENTER_FORMAT.into(),
            version: FORMAT_VERSION,
            stft,
            params,
            segmenter,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f: Self = load_envelope(path, SEGMENTER_FORMAT)?;
        Ok(f)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_json(path, self)
    }
}
