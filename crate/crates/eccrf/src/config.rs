//! TOML configuration shared by every command.

use std::path::{Path, PathBuf};

use eccrf_core::chains::{BrConfig, ClassifierKind, EccConfig};
use eccrf_core::codebook::CodebookConfig;
use eccrf_core::dataset::SyntheticConfig;
use eccrf_core::forest::{FeatureSubset, ForestConfig};
use eccrf_core::segmentation::{SegmentParams, SegmenterConfig};
use serde::{Deserialize, Serialize};

use crate::audio::StftConfig;
use crate::{Error, Result};

/// How decision thresholds are chosen from OOB scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// One threshold per class.
    #[default]
    PerClass,
    /// A single threshold minimizing the summed error over all classes.
    Single,
}

/// Which bags the codebook is fitted on inside cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodebookScope {
    /// Training-fold bags only.
    #[default]
    PerFold,
    /// All bags of the dataset, once per trial.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSource {
    /// Segment CSV plus label CSV.
    Miml {
        vocabulary: PathBuf,
        segments: PathBuf,
        labels: PathBuf,
    },
    /// Fixed-length features, no codebook step.
    Mlc { vocabulary: PathBuf, features: PathBuf },
    Synthetic(SyntheticConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(flatten)]
    pub source: DatasetSource,
    /// Optional fold file `id,fold` used for every trial.
    #[serde(default)]
    pub folds: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EccSection {
    pub chain_count: usize,
    pub tree_count: usize,
}

impl Default for EccSection {
    fn default() -> Self {
        Self {
            chain_count: 25,
            tree_count: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BrSection {
    pub tree_count: usize,
}

impl Default for BrSection {
    fn default() -> Self {
        Self { tree_count: 625 }
    }
}

/// Tree settings shared by BR and ECC members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestSection {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub features_per_split: FeatureSubset,
}

impl Default for ForestSection {
    fn default() -> Self {
        let f = ForestConfig::default();
        Self {
            max_depth: f.max_depth,
            min_leaf: f.min_leaf,
            features_per_split: f.features_per_split,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodebookSection {
    pub k: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub standardize: bool,
}

impl Default for CodebookSection {
    fn default() -> Self {
        let c = CodebookConfig::default();
        Self {
            k: c.k,
            max_iterations: c.max_iterations,
            tolerance: c.tolerance,
            standardize: c.standardize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmenterSection {
    pub tree_count: usize,
    pub max_depth: usize,
    pub samples_per_image: Option<usize>,
}

impl Default for SegmenterSection {
    fn default() -> Self {
        let s = SegmenterConfig::default();
        Self {
            tree_count: s.forest.tree_count,
            max_depth: s.forest.max_depth,
            samples_per_image: s.samples_per_image,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    pub fold_count: usize,
    pub repetitions: usize,
    pub classifiers: Vec<ClassifierKind>,
    pub codebook_scope: CodebookScope,
    pub threshold_mode: ThresholdMode,
    pub datasets: Vec<DatasetSpec>,
    pub ecc: EccSection,
    pub br: BrSection,
    pub forest: ForestSection,
    pub codebook: CodebookSection,
    pub synthetic: SyntheticConfig,
    pub stft: StftConfig,
    pub segmenter: SegmenterSection,
    pub segment: SegmentParams,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 1,
            fold_count: 10,
            repetitions: 10,
            classifiers: vec![ClassifierKind::Ecc, ClassifierKind::Br],
            codebook_scope: CodebookScope::default(),
            threshold_mode: ThresholdMode::default(),
            datasets: Vec::new(),
            ecc: EccSection::default(),
            br: BrSection::default(),
            forest: ForestSection::default(),
            codebook: CodebookSection::default(),
            synthetic: SyntheticConfig::default(),
            stft: StftConfig::default(),
            segmenter: SegmenterSection::default(),
            segment: SegmentParams::default(),
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl Config {
    /// Parses a TOML file; dataset paths are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_text(path)?;
        let mut config: Config = toml::from_str(&text).map_err(|e| Error::file(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for d in &mut config.datasets {
            match &mut d.source {
                DatasetSource::Miml {
                    vocabulary,
                    segments,
                    labels,
                } => {
                    resolve(base, vocabulary);
                    resolve(base, segments);
                    resolve(base, labels);
                }
                DatasetSource::Mlc { vocabulary, features } => {
                    resolve(base, vocabulary);
                    resolve(base, features);
                }
                DatasetSource::Synthetic(_) => {}
            }
            if let Some(f) = &mut d.folds {
                resolve(base, f);
            }
        }
        Ok(config)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if self.fold_count < 2 {
            return bad("fold_count must be at least 2");
        }
        if self.classifiers.is_empty() {
            return bad("at least one classifier is required");
        }
        if self.ecc.chain_count == 0 || self.ecc.tree_count == 0 || self.br.tree_count == 0 {
            return bad("chain and tree counts must be positive");
        }
        if self.codebook.k == 0 {
            return bad("codebook k must be positive");
        }
        let mut names: Vec<&str> = self.datasets.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("dataset names must be unique");
        }
        self.forest_config(1, 0).validate()?;
        Ok(())
    }

    pub fn forest_config(&self, tree_count: usize, seed: u64) -> ForestConfig {
        ForestConfig {
            tree_count,
            max_depth: self.forest.max_depth,
            min_leaf: self.forest.min_leaf,
            features_per_split: self.forest.features_per_split,
            seed,
        }
    }

    pub fn ecc_config(&self, seed: u64) -> EccConfig {
        EccConfig {
            chain_count: self.ecc.chain_count,
            forest: self.forest_config(self.ecc.tree_count, seed),
        }
    }

    pub fn br_config(&self, seed: u64) -> BrConfig {
        BrConfig {
            forest: self.forest_config(self.br.tree_count, seed),
        }
    }

    pub fn codebook_config(&self, seed: u64) -> CodebookConfig {
        CodebookConfig {
            k: self.codebook.k,
            max_iterations: self.codebook.max_iterations,
            tolerance: self.codebook.tolerance,
            standardize: self.codebook.standardize,
            seed,
        }
    }

    pub fn segmenter_config(&self, seed: u64) -> SegmenterConfig {
        SegmenterConfig {
            forest: ForestConfig {
                tree_count: self.segmenter.tree_count,
                max_depth: self.segmenter.max_depth,
                seed,
                ..ForestConfig::default()
            },
            samples_per_image: self.segmenter.samples_per_image,
        }
    }
}
