use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use eccrf_core::chains::{ClassifierKind, MultiLabelModel};
use eccrf_core::codebook::Codebook;
use eccrf_core::dataset::{generate_synthetic, LabelVocabulary, MimlBag, MimlDataset};
use eccrf_core::metrics::Measure;
use eccrf_core::segmentation::{PixelMask, Segmenter, Spectrogram, DESCRIPTOR_DIM};
use eccrf::artifacts::{self, CodebookFile, ModelFile, SegmenterFile};
use eccrf::audio::{self, StftConfig};
use eccrf::config::{Config, ThresholdMode};
use eccrf::{harness, io};

#[derive(Parser)]
#[command(name = "eccrf", version, about = "Multi-label classification with ensembles of classifier chains over random forests")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrogram segmentation: audio to MIML segment CSV.
    #[command(subcommand)]
    Segment(SegmentCommand),
    /// Segment codebooks.
    #[command(subcommand)]
    Codebook(CodebookCommand),
    /// Reduce MIML bags to histogram-of-segments MLC features.
    Featurize(FeaturizeArgs),
    /// Train a BR or ECC model on MLC data.
    Train(TrainArgs),
    /// Fit decision thresholds on out-of-bag scores of the training data.
    Calibrate(CalibrateArgs),
    /// Score and label a dataset with a calibrated model.
    Predict(PredictArgs),
    /// Compute the five measures of a prediction file.
    Evaluate(EvaluateArgs),
    /// Repeated cross-validation over the configured datasets.
    Experiment(ExperimentArgs),
    /// Generate a synthetic MIML dataset with correlated labels.
    Synth(SynthArgs),
}

#[derive(Subcommand)]
enum SegmentCommand {
    /// Train the pixel forest on annotated recordings.
    Train(SegmentTrainArgs),
    /// Segment recordings and describe each segment.
    Run(SegmentRunArgs),
}

#[derive(Args)]
struct SegmentTrainArgs {
    /// CSV `wav,mask` of annotated recordings; mask is PNG or CSV.
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
}

#[derive(Args)]
struct SegmentRunArgs {
    #[arg(long)]
    segmenter: PathBuf,
    /// CSV `id,wav,labels` of recordings.
    #[arg(long)]
    recordings: PathBuf,
    #[arg(long)]
    vocabulary: PathBuf,
    /// Output segment CSV `bag_id,f1,...`.
    #[arg(long)]
    segments: PathBuf,
    /// Output label CSV `bag_id,labels`.
    #[arg(long)]
    labels: PathBuf,
    /// Directory for per-recording segment JSON.
    #[arg(long)]
    json_dir: Option<PathBuf>,
    #[arg(long)]
    prob_threshold: Option<f64>,
    #[arg(long)]
    min_pixels: Option<usize>,
}

#[derive(Subcommand)]
enum CodebookCommand {
    /// Fit a k-means++ codebook on every segment of a segment CSV.
    Fit(CodebookFitArgs),
}

#[derive(Args)]
struct CodebookFitArgs {
    #[arg(long)]
    segments: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    standardize: bool,
}

#[derive(Args)]
struct FeaturizeArgs {
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long)]
    vocabulary: PathBuf,
    #[arg(long)]
    segments: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Output MLC CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// MLC CSV.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    vocabulary: PathBuf,
    #[arg(long, value_parser = parse_kind, default_value = "ecc")]
    classifier: ClassifierKind,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    model: PathBuf,
    /// The MLC CSV the model was trained on.
    #[arg(long)]
    data: PathBuf,
    /// Defaults to the model's vocabulary.
    #[arg(long)]
    vocabulary: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<ThresholdMode>,
    /// Defaults to overwriting `--model`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Drop bootstrap records after calibration; the model can no longer be
    /// recalibrated.
    #[arg(long)]
    compact: bool,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Defaults to the model's vocabulary.
    #[arg(long)]
    vocabulary: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    predictions: PathBuf,
    /// MLC CSV holding the true label sets.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    vocabulary: PathBuf,
    /// Optional CSV `measure,value`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    /// Worker threads; falls back to ECCRF_WORKERS, then all cores.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of classes.
    #[arg(long = "c")]
    classes: Option<usize>,
    /// Number of bags.
    #[arg(long = "n")]
    bags: Option<usize>,
    #[arg(long)]
    corr: Option<f64>,
    #[arg(long)]
    k_true: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn parse_kind(s: &str) -> Result<ClassifierKind, String> {
    match s {
        "ecc" => Ok(ClassifierKind::Ecc),
        "br" => Ok(ClassifierKind::Br),
        _ => Err(format!("unknown classifier `{s}`, expected ecc or br")),
    }
}

fn parse_mode(s: &str) -> Result<ThresholdMode, String> {
    match s {
        "per-class" => Ok(ThresholdMode::PerClass),
        "single" => Ok(ThresholdMode::Single),
        _ => Err(format!("unknown threshold mode `{s}`, expected per-class or single")),
    }
}

fn relative_to(listing: &Path, p: &str) -> PathBuf {
    let p = PathBuf::from(p);
    if p.is_relative() {
        listing.parent().unwrap_or(Path::new("")).join(p)
    } else {
        p
    }
}

fn read_listing(path: &Path, columns: &[&str]) -> anyhow::Result<Vec<Vec<String>>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header = reader.headers()?.clone();
    if header.iter().ne(columns.iter().copied()) {
        bail!("{}: header must be `{}`", path.display(), columns.join(","));
    }
    let mut rows = Vec::new();
    for r in reader.records() {
        let r = r.with_context(|| format!("reading {}", path.display()))?;
        rows.push(r.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

fn spectrogram_of(wav: &Path, stft: &StftConfig) -> anyhow::Result<Spectrogram> {
    let wave = audio::read_wav(wav)?.downmix();
    audio::compute_spectrogram(&wave, stft).with_context(|| format!("spectrogram of {}", wav.display()))
}

fn model_vocabulary(model: &ModelFile, path: Option<&Path>) -> anyhow::Result<LabelVocabulary> {
    let own = model.classifier.vocabulary();
    let Some(path) = path else {
        return Ok(own.clone());
    };
    let vocab = io::read_vocabulary(path)?;
    if &vocab != own {
        bail!(
            "vocabulary mismatch: model was trained on [{}] but {} lists [{}]",
            own.names().join(", "),
            path.display(),
            vocab.names().join(", ")
        );
    }
    Ok(vocab)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut config = Config::load_or_default(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    match cli.command {
        Command::Synth(a) => {
            let mut s = config.synthetic.clone();
            if let Some(seed) = cli.seed {
                s.seed = seed;
            }
            s.classes = a.classes.unwrap_or(s.classes);
            s.bags = a.bags.unwrap_or(s.bags);
            s.label_correlation = a.corr.unwrap_or(s.label_correlation);
            s.latent_clusters = a.k_true.unwrap_or(s.latent_clusters);
            let data = generate_synthetic(&s)?;
            io::write_vocabulary(&a.out_dir.join("vocabulary.txt"), data.vocabulary())?;
            io::write_miml(&a.out_dir.join("segments.csv"), &a.out_dir.join("labels.csv"), &data)?;
            println!("wrote {} bags to {}", data.len(), a.out_dir.display());
        }
        Command::Segment(SegmentCommand::Train(a)) => {
            let mut seg_config = config.segmenter_config(config.seed);
            seg_config.forest.tree_count = a.trees.unwrap_or(seg_config.forest.tree_count);
            seg_config.forest.max_depth = a.max_depth.unwrap_or(seg_config.forest.max_depth);
            let mut annotated = Vec::new();
            for row in read_listing(&a.annotations, &["wav", "mask"])? {
                let spec = spectrogram_of(&relative_to(&a.annotations, &row[0]), &config.stft)?;
                let mask: PixelMask = audio::read_mask(&relative_to(&a.annotations, &row[1]), spec.frames(), spec.bins())?;
                annotated.push((spec.normalized(), mask));
            }
            let mut segmenter = Segmenter::train(&annotated, &seg_config)?;
            segmenter.strip_bootstrap_records();
            SegmenterFile::new(segmenter, config.stft.clone(), config.segment.clone()).save(&a.out)?;
            println!("trained segmenter on {} recordings", annotated.len());
        }
        Command::Segment(SegmentCommand::Run(a)) => {
            let file = SegmenterFile::load(&a.segmenter)?;
            let mut params = file.params.clone();
            params.prob_threshold = a.prob_threshold.unwrap_or(params.prob_threshold);
            params.min_pixels = a.min_pixels.unwrap_or(params.min_pixels);
            let vocab = io::read_vocabulary(&a.vocabulary)?;
            let rows = read_listing(&a.recordings, &["id", "wav", "labels"])?;
            let mut bags = Vec::new();
            for row in &rows {
                let spec = spectrogram_of(&relative_to(&a.recordings, &row[1]), &file.stft)?;
                let found = audio::segment_spectrogram(&row[0], &spec, &file.segmenter, &params)?;
                if let Some(dir) = &a.json_dir {
                    artifacts::save_json(&dir.join(format!("{}.json", row[0])), &found)?;
                }
                bags.push(MimlBag {
                    id: row[0].clone(),
                    instances: found.segments.into_iter().map(|s| s.descriptor).collect(),
                    y: vocab.parse_labels(&row[2]).with_context(|| format!("labels of `{}`", row[0]))?,
                });
            }
            let data = MimlDataset::new(vocab, DESCRIPTOR_DIM, bags)?;
            io::write_miml(&a.segments, &a.labels, &data)?;
            println!(
                "segmented {} recordings into {} segments",
                data.len(),
                data.bags().iter().map(|b| b.instances.len()).sum::<usize>()
            );
        }
        Command::Codebook(CodebookCommand::Fit(a)) => {
            let mut cb_config = config.codebook_config(config.seed);
            cb_config.k = a.k.unwrap_or(cb_config.k);
            cb_config.standardize |= a.standardize;
            let (d, grouped) = io::read_segments(&a.segments)?;
            let vocab = LabelVocabulary::new(["unused"])?;
            let bags = grouped
                .into_iter()
                .map(|(id, instances)| MimlBag {
                    id,
                    instances,
                    y: eccrf_core::dataset::LabelSet::empty(1),
                })
                .collect();
            let data = MimlDataset::new(vocab, d, bags)?;
            let codebook = Codebook::fit(&data.pooled_instances(), &cb_config)?;
            println!("fitted k={} codebook, inertia {}", codebook.k(), codebook.inertia());
            CodebookFile::new(codebook, cb_config, artifacts::fingerprint_miml(&data)).save(&a.out)?;
        }
        Command::Featurize(a) => {
            let file = CodebookFile::load(&a.codebook)?;
            let vocab = io::read_vocabulary(&a.vocabulary)?;
            let miml = io::read_miml(&a.segments, &a.labels, &vocab)?;
            io::write_mlc(&a.out, &file.codebook.reduce(&miml)?)?;
        }
        Command::Train(a) => {
            config.ecc.chain_count = a.chains.unwrap_or(config.ecc.chain_count);
            if let Some(t) = a.trees {
                config.ecc.tree_count = t;
                config.br.tree_count = t;
            }
            config.forest.max_depth = a.max_depth.unwrap_or(config.forest.max_depth);
            config.validate()?;
            let data = io::read_mlc(&a.data, &io::read_vocabulary(&a.vocabulary)?)?;
            let model = harness::train_classifier(a.classifier, &data, &config, config.seed)?;
            ModelFile::new(model, &data).save(&a.out)?;
        }
        Command::Calibrate(a) => {
            let mut model = ModelFile::load(&a.model)?;
            let vocab = model_vocabulary(&model, a.vocabulary.as_deref())?;
            let data = io::read_mlc(&a.data, &vocab)?;
            if artifacts::fingerprint_mlc(&data) != model.training_fingerprint {
                bail!(
                    "{} is not the training set of {}; out-of-bag calibration needs the exact training data",
                    a.data.display(),
                    a.model.display()
                );
            }
            let mode = a.mode.unwrap_or(config.threshold_mode);
            let t = harness::calibrate(&model.classifier, &data, mode)?;
            model.thresholds = Some(t.as_slice().to_vec());
            model.threshold_mode = Some(mode);
            if a.compact {
                model.classifier.strip_bootstrap_records();
            }
            for (name, t) in vocab.names().iter().zip(t.as_slice()) {
                println!("{name}\t{t}");
            }
            model.save(a.out.as_deref().unwrap_or(&a.model))?;
        }
        Command::Predict(a) => {
            let model = ModelFile::load(&a.model)?;
            let vocab = model_vocabulary(&model, a.vocabulary.as_deref())?;
            let thresholds = model.threshold_vector()?;
            let data = io::read_mlc(&a.data, &vocab)?;
            let records = harness::predict(&model.classifier, &thresholds, &data)?;
            io::write_predictions(&a.out, &vocab, &records)?;
        }
        Command::Evaluate(a) => {
            let vocab = io::read_vocabulary(&a.vocabulary)?;
            let records = io::read_predictions(&a.predictions, &vocab)?;
            let truth = io::read_mlc(&a.data, &vocab)?;
            let report = harness::evaluate(&records, &truth)?;
            let mut csv = String::from("measure,value\n");
            for m in Measure::ALL {
                println!("{:<16} {:.4}", m.title(), report.get(m));
                csv.push_str(&format!("{},{}\n", m.key(), report.get(m)));
            }
            if let Some(out) = &a.out {
                io::write_text(out, &csv)?;
            }
        }
        Command::Experiment(a) => {
            config.repetitions = a.repetitions.unwrap_or(config.repetitions);
            config.fold_count = a.folds.unwrap_or(config.fold_count);
            let workers = match a.workers {
                Some(w) => Some(w),
                None => harness::workers_from_env()?,
            };
            let started = std::time::Instant::now();
            let result = harness::run_experiment(&config, workers)?;
            result.write(&a.out_dir)?;
            print!("{}", result.table());
            eprintln!("{} cells in {:.1} s", result.cells.len(), started.elapsed().as_secs_f64());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
