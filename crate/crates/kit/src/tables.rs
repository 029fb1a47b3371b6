//! CSV tables read and written by the toolkit.
//!
//! Every reader skips `#` comment lines and trims whitespace, so anything the
//! toolkit writes can be fed back in.

use std::collections::HashMap;
use std::io::{Read, Write};

use grasp_core::grasp::{validate_distribution, AnnotationSet, GraspError, GraspType};
use grasp_core::head::TrainingHistory;
use grasp_core::pareto::{CardSet, ModelCard, ParetoError};
use grasp_core::GraspDistribution;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("line {line}: {message}")]
    Invalid { line: u64, message: String },
    #[error("line {line}: {source}")]
    Label { line: u64, source: GraspError },
    #[error(transparent)]
    Pareto(#[from] ParetoError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input)
}

/// Writer that emits `header` even when no rows follow.
pub(crate) fn writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>, csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn rows<R: Read, T: for<'de> Deserialize<'de>>(input: R) -> Result<Vec<(u64, T)>, TableError> {
    let mut r = reader(input);
    let headers = r.headers()?.clone();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        out.push((line, rec.deserialize(Some(&headers))?));
    }
    Ok(out)
}

fn label(line: u64, p: [f64; 5]) -> Result<GraspDistribution, TableError> {
    validate_distribution(&p).map_err(|source| TableError::Label { line, source })
}

#[derive(Deserialize)]
struct AnnotationRow {
    object_id: String,
    annotator_id: String,
    choice: String,
}

/// Groups `object_id,annotator_id,choice` rows by object, in order of first
/// appearance. Choices may be codes or names.
pub fn read_annotations<R: Read>(input: R) -> Result<Vec<AnnotationSet>, TableError> {
    let mut sets: Vec<AnnotationSet> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut seen: HashMap<(String, String), u64> = HashMap::new();
    for (line, row) in rows::<_, AnnotationRow>(input)? {
        let choice: GraspType = row.choice.parse().map_err(|source| TableError::Label { line, source })?;
        if let Some(first) = seen.insert((row.object_id.clone(), row.annotator_id.clone()), line) {
            return Err(TableError::Invalid {
                line,
                message: format!("annotator {} already rated {} on line {first}", row.annotator_id, row.object_id),
            });
        }
        let i = *index.entry(row.object_id.clone()).or_insert_with(|| {
            sets.push(AnnotationSet::new(row.object_id.clone(), Vec::new()));
            sets.len() - 1
        });
        sets[i].choices.push(choice);
    }
    Ok(sets)
}

#[derive(Serialize, Deserialize)]
struct LabelRow {
    object_id: String,
    p0: f64,
    p1: f64,
    p2: f64,
    p3: f64,
    p4: f64,
}

pub fn write_labels<W: Write>(out: W, labels: &[(String, GraspDistribution)]) -> Result<(), TableError> {
    let mut w = writer(out, &["object_id", "p0", "p1", "p2", "p3", "p4"])?;
    for (id, d) in labels {
        let [p0, p1, p2, p3, p4] = *d.as_array();
        w.serialize((id, p0, p1, p2, p3, p4))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels<R: Read>(input: R) -> Result<Vec<(String, GraspDistribution)>, TableError> {
    rows::<_, LabelRow>(input)?
        .into_iter()
        .map(|(line, r)| Ok((r.object_id, label(line, [r.p0, r.p1, r.p2, r.p3, r.p4])?)))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct CardRow {
    name: String,
    top5_accuracy: f64,
    flops: u64,
}

pub fn read_cards<R: Read>(input: R) -> Result<CardSet, TableError> {
    let cards = rows::<_, CardRow>(input)?
        .into_iter()
        .map(|(line, r)| {
            ModelCard::new(r.name, r.top5_accuracy, r.flops)
                .map_err(|e| TableError::Invalid { line, message: e.to_string() })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CardSet::new(cards)?)
}

pub fn write_cards<W: Write>(out: W, cards: &[ModelCard]) -> Result<(), TableError> {
    let mut w = writer(out, &["name", "top5_accuracy", "flops"])?;
    for c in cards {
        w.serialize((&c.name, c.top5_accuracy, c.flops))?;
    }
    w.flush()?;
    Ok(())
}

/// One line of a training history file. Epoch 0 (phase 0) is the untrained head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub epoch: usize,
    pub phase: u8,
    pub train_loss: f64,
    pub val_angular_similarity: f64,
}

pub fn history_rows(h: &TrainingHistory) -> Vec<HistoryRow> {
    let initial = HistoryRow {
        epoch: 0,
        phase: 0,
        train_loss: h.initial_train_loss,
        val_angular_similarity: h.initial_val_similarity,
    };
    let epochs = (0..h.epochs()).map(|e| HistoryRow {
        epoch: e + 1,
        phase: h.phase[e],
        train_loss: h.train_loss[e],
        val_angular_similarity: h.val_similarity[e],
    });
    std::iter::once(initial).chain(epochs).collect()
}

pub fn write_history<W: Write>(out: W, rows: &[HistoryRow]) -> Result<(), TableError> {
    let mut w = writer(out, &["epoch", "phase", "train_loss", "val_angular_similarity"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_history<R: Read>(input: R) -> Result<Vec<HistoryRow>, TableError> {
    Ok(rows(input)?.into_iter().map(|(_, r)| r).collect())
}

/// Which side of the train/validation partition a row landed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Train,
    Val,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub row: usize,
    pub image_id: String,
    pub subset: Subset,
}

pub fn write_split<W: Write>(out: W, rows: &[SplitRow]) -> Result<(), TableError> {
    let mut w = writer(out, &["row", "image_id", "subset"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_split<R: Read>(input: R) -> Result<Vec<SplitRow>, TableError> {
    Ok(rows(input)?.into_iter().map(|(_, r)| r).collect())
}

#[derive(Deserialize)]
struct StreamRow {
    t: f64,
    p0: f64,
    p1: f64,
    p2: f64,
    p3: f64,
    p4: f64,
}

/// Timestamped distributions, `t,p0..p4`.
pub fn read_stream<R: Read>(input: R) -> Result<Vec<(f64, GraspDistribution)>, TableError> {
    rows::<_, StreamRow>(input)?
        .into_iter()
        .map(|(line, r)| Ok((r.t, label(line, [r.p0, r.p1, r.p2, r.p3, r.p4])?)))
        .collect()
}

pub fn write_stream<W: Write>(out: W, rows: &[(f64, GraspDistribution)]) -> Result<(), TableError> {
    let mut w = writer(out, &["t", "p0", "p1", "p2", "p3", "p4"])?;
    for (t, d) in rows {
        let [p0, p1, p2, p3, p4] = *d.as_array();
        w.serialize((t, p0, p1, p2, p3, p4))?;
    }
    w.flush()?;
    Ok(())
}

/// Per-frame output of the fusion simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub t: f64,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    pub grasp: String,
    pub window_full: bool,
}

pub fn write_decisions<W: Write>(out: W, rows: &[DecisionRow]) -> Result<(), TableError> {
    let mut w = writer(out, &["t", "p0", "p1", "p2", "p3", "p4", "grasp", "window_full"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_decisions<R: Read>(input: R) -> Result<Vec<DecisionRow>, TableError> {
    Ok(rows(input)?.into_iter().map(|(_, r)| r).collect())
}

/// Augmented image list, `image_file,p0..p4`.
pub fn write_image_manifest<W: Write>(out: W, rows: &[(String, GraspDistribution)]) -> Result<(), TableError> {
    let mut w = writer(out, &["image_file", "p0", "p1", "p2", "p3", "p4"])?;
    for (file, d) in rows {
        let [p0, p1, p2, p3, p4] = *d.as_array();
        w.serialize((file, p0, p1, p2, p3, p4))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct ImageRow {
    image_file: String,
    p0: f64,
    p1: f64,
    p2: f64,
    p3: f64,
    p4: f64,
}

pub fn read_image_manifest<R: Read>(input: R) -> Result<Vec<(String, GraspDistribution)>, TableError> {
    rows::<_, ImageRow>(input)?
        .into_iter()
        .map(|(line, r)| Ok((r.image_file, label(line, [r.p0, r.p1, r.p2, r.p3, r.p4])?)))
        .collect()
}

/// Input list for the augmenter, `image_file,mask_file,p0..p4`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectEntry {
    pub image_file: String,
    pub mask_file: String,
    pub label: GraspDistribution,
}

#[derive(Deserialize)]
struct ObjectRow {
    image_file: String,
    mask_file: String,
    p0: f64,
    p1: f64,
    p2: f64,
    p3: f64,
    p4: f64,
}

pub fn read_objects<R: Read>(input: R) -> Result<Vec<ObjectEntry>, TableError> {
    rows::<_, ObjectRow>(input)?
        .into_iter()
        .map(|(line, r)| {
            Ok(ObjectEntry {
                image_file: r.image_file,
                mask_file: r.mask_file,
                label: label(line, [r.p0, r.p1, r.p2, r.p3, r.p4])?,
            })
        })
        .collect()
}

pub fn write_objects<W: Write>(out: W, rows: &[ObjectEntry]) -> Result<(), TableError> {
    let mut w = writer(out, &["image_file", "mask_file", "p0", "p1", "p2", "p3", "p4"])?;
    for e in rows {
        let [p0, p1, p2, p3, p4] = *e.label.as_array();
        w.serialize((&e.image_file, &e.mask_file, p0, p1, p2, p3, p4))?;
    }
    w.flush()?;
    Ok(())
}
