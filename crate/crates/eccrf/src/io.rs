//! CSV and text formats.
//!
//! All numbers are written with Rust's shortest round-trip formatting, so a
//! write followed by a read reproduces every value bit for bit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use eccrf_core::dataset::{
    FoldPlan, LabelSet, LabelVocabulary, MimlBag, MimlDataset, MlcDataset, MlcExample,
};

use crate::{Error, Result};

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map_err(|e| Error::io(path, e))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(open(path)?))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(create(path)?))
}

fn format_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    format_err(path, line, e.to_string())
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Reads the header and checks its fixed columns. Returns the number of
/// feature columns between `first` and the optional `last`.
fn check_header(path: &Path, reader: &mut csv::Reader<File>, first: &str, last: Option<&str>) -> Result<usize> {
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let fixed = 1 + usize::from(last.is_some());
    if header.len() < fixed || &header[0] != first {
        return Err(format_err(path, 1, format!("header must start with `{first}`")));
    }
    if let Some(last) = last {
        if &header[header.len() - 1] != last {
            return Err(format_err(path, 1, format!("header must end with `{last}`")));
        }
    }
    let d = header.len() - fixed;
    for k in 0..d {
        let want = format!("f{}", k + 1);
        if header[k + 1] != want {
            return Err(format_err(path, 1, format!("column {} must be `{want}`, found `{}`", k + 2, &header[k + 1])));
        }
    }
    Ok(d)
}

fn parse_values(path: &Path, record: &csv::StringRecord, range: std::ops::Range<usize>) -> Result<Vec<f64>> {
    range
        .map(|k| {
            let field = record[k].trim();
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(format_err(path, line_of(record), format!("non-finite value `{field}` in column {}", k + 1))),
                Err(_) => Err(format_err(path, line_of(record), format!("bad number `{field}` in column {}", k + 1))),
            }
        })
        .collect()
}

fn parse_labels(path: &Path, record: &csv::StringRecord, k: usize, vocab: &LabelVocabulary) -> Result<LabelSet> {
    vocab
        .parse_labels(&record[k])
        .map_err(|e| format_err(path, line_of(record), e.to_string()))
}

fn header_row(first: &str, d: usize, last: Option<&str>) -> Vec<String> {
    let mut row = vec![first.to_string()];
    row.extend((1..=d).map(|k| format!("f{k}")));
    row.extend(last.map(str::to_string));
    row
}

/// Reads a vocabulary file: one label name per line, blank lines ignored.
pub fn read_vocabulary(path: &Path) -> Result<LabelVocabulary> {
    let mut names = Vec::new();
    for (k, line) in BufReader::new(open(path)?).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let name = line.trim();
        if !name.is_empty() {
            if names.iter().any(|n: &String| n == name) {
                return Err(format_err(path, k as u64 + 1, format!("duplicate label `{name}`")));
            }
            names.push(name.to_string());
        }
    }
    LabelVocabulary::new(names).map_err(|e| Error::file(path, e))
}

pub fn write_vocabulary(path: &Path, vocab: &LabelVocabulary) -> Result<()> {
    let mut out = String::new();
    for name in vocab.names() {
        out.push_str(name);
        out.push('\n');
    }
    create(path)?.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Reads an MLC CSV with header `id,f1,...,fd,labels`.
pub fn read_mlc(path: &Path, vocab: &LabelVocabulary) -> Result<MlcDataset> {
    let mut reader = csv_reader(path)?;
    let d = check_header(path, &mut reader, "id", Some("labels"))?;
    let mut examples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        examples.push(MlcExample {
            id: record[0].to_string(),
            x: parse_values(path, &record, 1..d + 1)?,
            y: parse_labels(path, &record, d + 1, vocab)?,
        });
    }
    MlcDataset::new(vocab.clone(), examples, d).map_err(|e| Error::file(path, e))
}

pub fn write_mlc(path: &Path, data: &MlcDataset) -> Result<()> {
    let mut w = csv_writer(path)?;
    let werr = |e: csv::Error| csv_err(path, e);
    w.write_record(header_row("id", data.dim(), Some("labels"))).map_err(werr)?;
    for e in data.examples() {
        let mut row = vec![e.id.clone()];
        row.extend(e.x.iter().map(|v| v.to_string()));
        row.push(data.vocabulary().format_labels(&e.y));
        w.write_record(&row).map_err(werr)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Segment rows grouped by bag id, in first-seen order.
pub type GroupedSegments = Vec<(String, Vec<Vec<f64>>)>;

/// Reads segment rows `bag_id,f1,...,fd` grouped by bag, in first-seen order.
pub fn read_segments(path: &Path) -> Result<(usize, GroupedSegments)> {
    let mut reader = csv_reader(path)?;
    let d = check_header(path, &mut reader, "bag_id", None)?;
    let mut bags: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let x = parse_values(path, &record, 1..d + 1)?;
        let id = &record[0];
        let slot = *index.entry(id.to_string()).or_insert_with(|| {
            bags.push((id.to_string(), Vec::new()));
            bags.len() - 1
        });
        bags[slot].1.push(x);
    }
    Ok((d, bags))
}

/// Reads a MIML dataset from a segment CSV and a label CSV (`bag_id,labels`).
///
/// Bag order follows the label file. A labelled bag without segment rows is
/// an empty bag; segment rows for an unlabelled bag are an error.
pub fn read_miml(segments: &Path, labels: &Path, vocab: &LabelVocabulary) -> Result<MimlDataset> {
    let (d, grouped) = read_segments(segments)?;
    let mut by_id: BTreeMap<String, Vec<Vec<f64>>> = grouped.into_iter().collect();
    let mut reader = csv_reader(labels)?;
    let header = reader.headers().map_err(|e| csv_err(labels, e))?.clone();
    if header.len() != 2 || &header[0] != "bag_id" || &header[1] != "labels" {
        return Err(format_err(labels, 1, "header must be `bag_id,labels`"));
    }
    let mut bags = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(labels, e))?;
        let id = record[0].to_string();
        bags.push(MimlBag {
            instances: by_id.remove(&id).unwrap_or_default(),
            y: parse_labels(labels, &record, 1, vocab)?,
            id,
        });
    }
    if let Some(id) = by_id.keys().next() {
        return Err(Error::Mismatch(format!(
            "{}: bag `{id}` has segments but no row in {}",
            segments.display(),
            labels.display()
        )));
    }
    Ok(MimlDataset::new(vocab.clone(), d, bags)?)
}

pub fn write_miml(segments: &Path, labels: &Path, data: &MimlDataset) -> Result<()> {
    let mut w = csv_writer(segments)?;
    let werr = |e: csv::Error| csv_err(segments, e);
    w.write_record(header_row("bag_id", data.instance_dim(), None)).map_err(werr)?;
    for bag in data.bags() {
        for inst in &bag.instances {
            let mut row = vec![bag.id.clone()];
            row.extend(inst.iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(werr)?;
        }
    }
    w.flush().map_err(|e| Error::io(segments, e))?;

    let mut w = csv_writer(labels)?;
    let werr = |e: csv::Error| csv_err(labels, e);
    w.write_record(["bag_id", "labels"]).map_err(werr)?;
    for bag in data.bags() {
        w.write_record([bag.id.as_str(), &data.vocabulary().format_labels(&bag.y)]).map_err(werr)?;
    }
    w.flush().map_err(|e| Error::io(labels, e))
}

/// Reads a fold file `id,fold`. The fold count is the largest index plus one.
pub fn read_folds(path: &Path) -> Result<FoldPlan> {
    let mut reader = csv_reader(path)?;
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.len() != 2 || &header[0] != "id" || &header[1] != "fold" {
        return Err(format_err(path, 1, "header must be `id,fold`"));
    }
    let mut assignment = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let fold: usize = record[1]
            .trim()
            .parse()
            .map_err(|_| format_err(path, line_of(&record), format!("bad fold index `{}`", &record[1])))?;
        if assignment.insert(record[0].to_string(), fold).is_some() {
            return Err(format_err(path, line_of(&record), format!("duplicate id `{}`", &record[0])));
        }
    }
    let fold_count = assignment.values().max().map_or(0, |&f| f + 1);
    FoldPlan::from_assignment(fold_count, assignment).map_err(|e| Error::file(path, e))
}

pub fn write_folds(path: &Path, plan: &FoldPlan) -> Result<()> {
    let mut w = csv_writer(path)?;
    let werr = |e: csv::Error| csv_err(path, e);
    w.write_record(["id", "fold"]).map_err(werr)?;
    for (id, fold) in plan.assignment() {
        w.write_record([id.as_str(), &fold.to_string()]).map_err(werr)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Predicted label set and class scores for one example.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub id: String,
    pub labels: LabelSet,
    pub scores: Vec<f64>,
}

fn score_column(name: &str) -> String {
    format!("score_{name}")
}

/// Writes `id,labels,score_<class>...` in vocabulary order.
pub fn write_predictions(path: &Path, vocab: &LabelVocabulary, records: &[PredictionRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let werr = |e: csv::Error| csv_err(path, e);
    let mut header = vec!["id".to_string(), "labels".to_string()];
    header.extend(vocab.names().iter().map(|n| score_column(n)));
    w.write_record(&header).map_err(werr)?;
    for r in records {
        let mut row = vec![r.id.clone(), vocab.format_labels(&r.labels)];
        row.extend(r.scores.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(werr)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: &Path, vocab: &LabelVocabulary) -> Result<Vec<PredictionRecord>> {
    let mut reader = csv_reader(path)?;
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let expected: Vec<String> = ["id".to_string(), "labels".to_string()]
        .into_iter()
        .chain(vocab.names().iter().map(|n| score_column(n)))
        .collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(format_err(
            path,
            1,
            format!("header does not match the vocabulary; expected `{}`", expected.join(",")),
        ));
    }
    let c = vocab.len();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        out.push(PredictionRecord {
            id: record[0].to_string(),
            labels: parse_labels(path, &record, 1, vocab)?,
            scores: parse_values(path, &record, 2..2 + c)?,
        });
    }
    Ok(out)
}

/// Writes a string to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    create(path)?.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
