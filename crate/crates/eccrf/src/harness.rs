//! Repeated cross-validation over datasets and classifiers.
//!
//! Every trial x fold cell is an independent job whose random streams are
//! derived from the master seed and the cell coordinates, so results do not
//! depend on the number of workers or the order jobs finish in.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use eccrf_core::chains::{
    predict_set, select_threshold, BrModel, Classifier, ClassifierKind, EccModel, MultiLabelModel,
    ThresholdVector,
};
use eccrf_core::codebook::Codebook;
use eccrf_core::dataset::{generate_synthetic, make_folds, FoldPlan, MimlDataset, MlcDataset};
use eccrf_core::metrics::{win_loss, Measure, MetricsReport, Prediction, PredictionBatch, WinLossTable};
use eccrf_core::seeds;
use rayon::prelude::*;

use crate::config::{CodebookScope, Config, DatasetSource, DatasetSpec, ThresholdMode};
use crate::io::{self, PredictionRecord};
use crate::{Error, Result};

pub const TAG_FOLDS: u64 = 0x464f_4c44;
pub const TAG_CODEBOOK: u64 = 0x434f_4442;
pub const TAG_MODEL: u64 = 0x4d4f_444c;

/// Environment variable holding the worker thread count.
pub const WORKERS_ENV: &str = "ECCRF_WORKERS";

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

/// A dataset as the harness sees it.
#[derive(Debug, Clone)]
pub enum Data {
    Miml(MimlDataset),
    Mlc(MlcDataset),
}

impl Data {
    pub fn ids(&self) -> Vec<String> {
        match self {
            Data::Miml(d) => d.ids().map(str::to_string).collect(),
            Data::Mlc(d) => d.ids().map(str::to_string).collect(),
        }
    }
}

pub fn load_dataset(spec: &DatasetSpec) -> Result<Data> {
    Ok(match &spec.source {
        DatasetSource::Miml {
            vocabulary,
            segments,
            labels,
        } => Data::Miml(io::read_miml(segments, labels, &io::read_vocabulary(vocabulary)?)?),
        DatasetSource::Mlc { vocabulary, features } => {
            Data::Mlc(io::read_mlc(features, &io::read_vocabulary(vocabulary)?)?)
        }
        DatasetSource::Synthetic(s) => Data::Miml(generate_synthetic(s)?),
    })
}

pub fn train_classifier(kind: ClassifierKind, data: &MlcDataset, config: &Config, seed: u64) -> Result<Classifier> {
    Ok(match kind {
        ClassifierKind::Br => Classifier::Br(BrModel::train(data, &config.br_config(seed))?),
        ClassifierKind::Ecc => Classifier::Ecc(EccModel::train(data, &config.ecc_config(seed))?),
    })
}

/// Thresholds from OOB scores on the model's own training set.
pub fn calibrate<M: MultiLabelModel + ?Sized>(model: &M, training: &MlcDataset, mode: ThresholdMode) -> Result<ThresholdVector> {
    let oob = model.oob_scores(training)?;
    let columns: Vec<Vec<bool>> = (0..training.classes()).map(|j| training.label_column(j)).collect();
    Ok(match mode {
        ThresholdMode::PerClass => ThresholdVector::new(
            oob.scores
                .iter()
                .zip(&columns)
                .map(|(s, y)| select_threshold(s, y))
                .collect(),
        )?,
        ThresholdMode::Single => {
            let scores: Vec<f64> = oob.scores.concat();
            let labels: Vec<bool> = columns.concat();
            ThresholdVector::uniform(training.classes(), select_threshold(&scores, &labels))?
        }
    })
}

/// Scores and label sets for every example of `data`.
pub fn predict<M: MultiLabelModel + ?Sized>(
    model: &M,
    thresholds: &ThresholdVector,
    data: &MlcDataset,
) -> Result<Vec<PredictionRecord>> {
    model.check_dataset(data)?;
    data.examples()
        .iter()
        .map(|e| {
            let scores = model.scores(&e.x)?;
            Ok(PredictionRecord {
                id: e.id.clone(),
                labels: predict_set(&scores, thresholds)?,
                scores: scores.0,
            })
        })
        .collect()
}

/// Pairs predictions with the ground truth of `truth` by id.
pub fn evaluate(records: &[PredictionRecord], truth: &MlcDataset) -> Result<MetricsReport> {
    let by_id: std::collections::HashMap<&str, &PredictionRecord> =
        records.iter().map(|r| (r.id.as_str(), r)).collect();
    if by_id.len() != records.len() {
        return Err(Error::Mismatch("duplicate ids among predictions".into()));
    }
    let mut entries = Vec::with_capacity(truth.len());
    for e in truth.examples() {
        let r = by_id
            .get(e.id.as_str())
            .ok_or_else(|| Error::Mismatch(format!("no prediction for example `{}`", e.id)))?;
        entries.push(Prediction {
            truth: e.y.clone(),
            scores: eccrf_core::chains::ScoreVector(r.scores.clone()),
            predicted: r.labels.clone(),
        });
    }
    if entries.len() != records.len() {
        return Err(Error::Mismatch(format!(
            "{} predictions for {} labelled examples",
            records.len(),
            entries.len()
        )));
    }
    Ok(MetricsReport::evaluate(&PredictionBatch::new(entries)?))
}

/// Which example ids each learned component of a cell was fitted on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellTrace {
    pub train_ids: BTreeSet<String>,
    pub test_ids: BTreeSet<String>,
    /// Bags whose segments the codebook was fitted on; empty for MLC data.
    pub codebook_ids: BTreeSet<String>,
    pub model_ids: BTreeSet<String>,
    pub calibration_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub dataset: String,
    pub classifier: ClassifierKind,
    pub trial: usize,
    pub fold: usize,
    pub report: MetricsReport,
    pub thresholds: Vec<f64>,
    pub trace: CellTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dataset: String,
    pub classifier: ClassifierKind,
    /// Arithmetic mean over all trial x fold cells.
    pub mean: MetricsReport,
    pub cells: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// Ordered by dataset, trial, fold, then classifier in config order.
    pub cells: Vec<CellResult>,
    /// Ordered by dataset, then classifier in config order.
    pub summary: Vec<SummaryRow>,
    pub win_loss: WinLossTable,
}

struct Job {
    dataset: usize,
    trial: usize,
    fold: usize,
}

struct Prepared {
    name: String,
    data: Data,
    ids: Vec<String>,
    plans: Vec<FoldPlan>,
    /// Per-trial codebooks fitted on every bag (global scope only).
    global: Vec<Option<Codebook>>,
}

fn ids_of(ids: &[String], idx: &[usize]) -> BTreeSet<String> {
    idx.iter().map(|&i| ids[i].clone()).collect()
}

fn prepare(config: &Config, k: usize, spec: &DatasetSpec) -> Result<Prepared> {
    let data = load_dataset(spec)?;
    let ids = data.ids();
    let imported = spec.folds.as_deref().map(io::read_folds).transpose()?;
    let plans = (0..config.repetitions)
        .map(|r| match &imported {
            Some(p) => Ok(p.clone()),
            None => Ok(make_folds(&ids, config.fold_count, seeds::derive(config.seed, &[TAG_FOLDS, k as u64, r as u64]))?),
        })
        .collect::<Result<Vec<_>>>()?;
    let global = (0..config.repetitions)
        .map(|r| match (&data, config.codebook_scope) {
            (Data::Miml(m), CodebookScope::Global) => {
                let seed = seeds::derive(config.seed, &[TAG_CODEBOOK, k as u64, r as u64]);
                Ok(Some(Codebook::fit(&m.pooled_instances(), &config.codebook_config(seed))?))
            }
            _ => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Prepared {
        name: spec.name.clone(),
        data,
        ids,
        plans,
        global,
    })
}

fn run_cell(config: &Config, k: usize, p: &Prepared, job: &Job) -> Result<Vec<CellResult>> {
    let (train_idx, test_idx) = p.plans[job.trial].split(&p.ids, job.fold)?;
    let mut codebook_ids = BTreeSet::new();
    let (train, test) = match &p.data {
        Data::Mlc(d) => (d.subset(&train_idx), d.subset(&test_idx)),
        Data::Miml(m) => {
            let train_bags = m.subset(&train_idx);
            let fitted;
            let codebook = match &p.global[job.trial] {
                Some(cb) => {
                    codebook_ids = p.ids.iter().cloned().collect();
                    cb
                }
                None => {
                    let seed = seeds::derive(config.seed, &[TAG_CODEBOOK, k as u64, job.trial as u64, job.fold as u64]);
                    fitted = Codebook::fit(&train_bags.pooled_instances(), &config.codebook_config(seed))?;
                    codebook_ids = train_bags.ids().map(str::to_string).collect();
                    &fitted
                }
            };
            (codebook.reduce(&train_bags)?, codebook.reduce(&m.subset(&test_idx))?)
        }
    };
    let model_seed = seeds::derive(config.seed, &[TAG_MODEL, k as u64, job.trial as u64, job.fold as u64]);
    let train_ids: BTreeSet<String> = train.ids().map(str::to_string).collect();
    config
        .classifiers
        .iter()
        .map(|&kind| {
            let model = train_classifier(kind, &train, config, model_seed)?;
            let thresholds = calibrate(&model, &train, config.threshold_mode)?;
            let records = predict(&model, &thresholds, &test)?;
            Ok(CellResult {
                dataset: p.name.clone(),
                classifier: kind,
                trial: job.trial,
                fold: job.fold,
                report: evaluate(&records, &test)?,
                thresholds: thresholds.as_slice().to_vec(),
                trace: CellTrace {
                    train_ids: ids_of(&p.ids, &train_idx),
                    test_ids: ids_of(&p.ids, &test_idx),
                    codebook_ids: codebook_ids.clone(),
                    model_ids: train_ids.clone(),
                    calibration_ids: train_ids.clone(),
                },
            })
        })
        .collect()
}

/// Runs every dataset x trial x fold cell on `workers` threads (all
/// available cores when `None`).
pub fn run_experiment(config: &Config, workers: Option<usize>) -> Result<ExperimentResult> {
    config.validate()?;
    if config.datasets.is_empty() {
        return Err(Error::Config("no datasets configured".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        let prepared = config
            .datasets
            .iter()
            .enumerate()
            .map(|(k, spec)| {
                prepare(config, k, spec).map_err(|e| Error::Config(format!("dataset `{}`: {e}", spec.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut jobs = Vec::new();
        for (k, p) in prepared.iter().enumerate() {
            for (trial, plan) in p.plans.iter().enumerate() {
                for fold in 0..plan.fold_count() {
                    jobs.push(Job { dataset: k, trial, fold });
                }
            }
        }
        log::info!("running {} cells", jobs.len());
        let per_job = jobs
            .par_iter()
            .map(|job| {
                run_cell(config, job.dataset, &prepared[job.dataset], job).map_err(|e| Error::Cell {
                    trial: job.trial,
                    fold: job.fold,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let cells: Vec<CellResult> = per_job.into_iter().flatten().collect();
        let mut summary = Vec::new();
        for p in &prepared {
            for &kind in &config.classifiers {
                let reports: Vec<MetricsReport> = cells
                    .iter()
                    .filter(|c| c.dataset == p.name && c.classifier == kind)
                    .map(|c| c.report.clone())
                    .collect();
                summary.push(SummaryRow {
                    dataset: p.name.clone(),
                    classifier: kind,
                    cells: reports.len(),
                    mean: MetricsReport::mean(&reports)?,
                });
            }
        }
        let entries: Vec<_> = summary
            .iter()
            .map(|s| (s.dataset.as_str(), s.classifier.name(), &s.mean))
            .collect();
        let win_loss = win_loss(&entries)?;
        Ok(ExperimentResult {
            cells,
            summary,
            win_loss,
        })
    })
}

fn csv_line(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

impl ExperimentResult {
    /// `dataset,classifier,trial,fold,measure,value`, one row per measure.
    pub fn cells_csv(&self) -> String {
        let mut out = String::from("dataset,classifier,trial,fold,measure,value\n");
        for c in &self.cells {
            for m in Measure::ALL {
                out.push_str(&csv_line(&[
                    c.dataset.clone(),
                    c.classifier.name().into(),
                    c.trial.to_string(),
                    c.fold.to_string(),
                    m.key().into(),
                    c.report.get(m).to_string(),
                ]));
            }
        }
        out
    }

    /// One row per dataset and classifier, measures in table order.
    pub fn summary_csv(&self) -> String {
        let mut header = vec!["dataset".to_string(), "classifier".into()];
        header.extend(Measure::ALL.iter().map(|m| m.key().to_string()));
        header.push("cells".into());
        let mut out = csv_line(&header);
        for s in &self.summary {
            let mut row = vec![s.dataset.clone(), s.classifier.name().to_string()];
            row.extend(Measure::ALL.iter().map(|&m| s.mean.get(m).to_string()));
            row.push(s.cells.to_string());
            out.push_str(&csv_line(&row));
        }
        out
    }

    pub fn win_loss_csv(&self) -> String {
        let mut out = String::from("classifier,opponent,wins,losses,ties\n");
        for ((a, b), r) in self.win_loss.entries() {
            out.push_str(&csv_line(&[
                a.clone(),
                b.clone(),
                r.wins.to_string(),
                r.losses.to_string(),
                r.ties.to_string(),
            ]));
        }
        out
    }

    /// Fixed-width summary table followed by the win-loss records.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<16} {:<6}", "dataset", "method");
        for m in Measure::ALL {
            let _ = write!(out, " {:>14}", m.title());
        }
        out.push('\n');
        for s in &self.summary {
            let _ = write!(out, "{:<16} {:<6}", s.dataset, s.classifier.name());
            for m in Measure::ALL {
                let _ = write!(out, " {:>14.4}", s.mean.get(m));
            }
            out.push('\n');
        }
        for ((a, b), r) in self.win_loss.entries() {
            let _ = writeln!(out, "{a} vs {b}: {r} ({} ties)", r.ties);
        }
        out
    }

    /// Writes `cells.csv`, `summary.csv`, `win_loss.csv` and `summary.txt`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        io::write_text(&dir.join("cells.csv"), &self.cells_csv())?;
        io::write_text(&dir.join("summary.csv"), &self.summary_csv())?;
        io::write_text(&dir.join("win_loss.csv"), &self.win_loss_csv())?;
        io::write_text(&dir.join("summary.txt"), &self.table())
    }
}
