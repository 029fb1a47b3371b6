//! GFEA feature files: a binary payload of f32 rows plus a CSV manifest
//! holding image ids and labels.
//!
//! Layout, all little-endian: `b"GFEA"`, version `u16`, row count `u32`,
//! feature dimension `u32`, then `rows * dim` f32 values. The manifest sits
//! next to the payload as `<stem>.manifest.csv` with header
//! `row,image_id,p0,p1,p2,p3,p4`.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use grasp_core::grasp::{validate_distribution, GraspError};
use grasp_core::{FeatureDataset, FeatureRow};
use serde::{Deserialize, Serialize};

pub const MAGIC: &[u8; 4] = b"GFEA";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 14;

#[derive(Debug, thiserror::Error)]
pub enum GfeaError {
    #[error("not a GFEA file (bad magic)")]
    BadMagic,
    #[error("unsupported GFEA version {0}")]
    VersionUnsupported(u16),
    #[error("payload is {actual} bytes, header implies {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("manifest does not match payload: {0}")]
    ManifestMismatch(String),
    #[error("row {row}: feature does not fit in f32")]
    NotRepresentable { row: usize },
    #[error("manifest row {row}: {source}")]
    Label { row: usize, source: GraspError },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{}: {source}", path.display())]
    File { path: std::path::PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn file_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> GfeaError + '_ {
    move |source| GfeaError::File { path: path.to_path_buf(), source }
}

/// Header fields of a GFEA payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureFileHeader {
    pub version: u16,
    pub rows: u32,
    pub dim: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRow {
    row: usize,
    image_id: String,
    p0: f64,
    p1: f64,
    p2: f64,
    p3: f64,
    p4: f64,
}

/// `feats.gfea` -> `feats.manifest.csv`.
pub fn manifest_path(payload: &Path) -> PathBuf {
    payload.with_extension("manifest.csv")
}

pub fn encode_payload(data: &FeatureDataset) -> Result<Vec<u8>, GfeaError> {
    let dim = data.feature_dim();
    let mut out = Vec::with_capacity(HEADER_LEN + data.len() * dim * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(data.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for (row, r) in data.rows().iter().enumerate() {
        for &v in &r.features {
            let f = v as f32;
            if !f.is_finite() {
                return Err(GfeaError::NotRepresentable { row });
            }
            out.extend_from_slice(&f.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_header(bytes: &[u8]) -> Result<FeatureFileHeader, GfeaError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(GfeaError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(GfeaError::LengthMismatch { expected: HEADER_LEN, actual: bytes.len() });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(GfeaError::VersionUnsupported(version));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    Ok(FeatureFileHeader { version, rows: u32_at(6), dim: u32_at(10) })
}

/// Parses a payload into its header and feature rows (widened to f64).
pub fn decode_payload(bytes: &[u8]) -> Result<(FeatureFileHeader, Vec<Vec<f64>>), GfeaError> {
    let header = decode_header(bytes)?;
    let (rows, dim) = (header.rows as usize, header.dim as usize);
    let expected = rows
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or(GfeaError::LengthMismatch { expected: usize::MAX, actual: bytes.len() })?;
    if bytes.len() != expected {
        return Err(GfeaError::LengthMismatch { expected, actual: bytes.len() });
    }
    let mut values =
        bytes[HEADER_LEN..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64);
    let features = (0..rows).map(|_| values.by_ref().take(dim).collect()).collect();
    Ok((header, features))
}

pub fn write_manifest<W: Write>(out: W, data: &FeatureDataset) -> Result<(), GfeaError> {
    let mut w = crate::tables::writer(out, &["row", "image_id", "p0", "p1", "p2", "p3", "p4"])?;
    for (row, r) in data.rows().iter().enumerate() {
        let [p0, p1, p2, p3, p4] = *r.label.as_array();
        w.serialize(ManifestRow { row, image_id: r.image_id.clone(), p0, p1, p2, p3, p4 })?;
    }
    w.flush()?;
    Ok(())
}

/// Manifest entries as `(image_id, label)` after checking row numbering.
pub fn read_manifest<R: Read>(input: R) -> Result<Vec<(String, grasp_core::GraspDistribution)>, GfeaError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in r.deserialize::<ManifestRow>().enumerate() {
        let m = rec?;
        if m.row != i {
            return Err(GfeaError::ManifestMismatch(format!("entry {i} is numbered {}", m.row)));
        }
        let label = validate_distribution(&[m.p0, m.p1, m.p2, m.p3, m.p4])
            .map_err(|source| GfeaError::Label { row: i, source })?;
        out.push((m.image_id, label));
    }
    Ok(out)
}

/// Joins a decoded payload with its manifest.
pub fn assemble(bytes: &[u8], manifest: impl Read) -> Result<FeatureDataset, GfeaError> {
    let (header, features) = decode_payload(bytes)?;
    let entries = read_manifest(manifest)?;
    if entries.len() != features.len() {
        return Err(GfeaError::ManifestMismatch(format!(
            "header has {} rows, manifest has {}",
            features.len(),
            entries.len()
        )));
    }
    let rows = features
        .into_iter()
        .zip(entries)
        .map(|(features, (image_id, label))| FeatureRow { image_id, features, label })
        .collect();
    Ok(FeatureDataset::new(header.dim as usize, rows).expect("decoded rows are uniform and finite"))
}

pub fn write_feature_file(path: &Path, data: &FeatureDataset) -> Result<(), GfeaError> {
    let payload = encode_payload(data)?;
    let mut manifest = Vec::new();
    write_manifest(&mut manifest, data)?;
    fs::write(path, payload).map_err(file_err(path))?;
    let mpath = manifest_path(path);
    fs::write(&mpath, manifest).map_err(file_err(&mpath))?;
    Ok(())
}

pub fn read_feature_file(path: &Path) -> Result<FeatureDataset, GfeaError> {
    let bytes = fs::read(path).map_err(file_err(path))?;
    let mpath = manifest_path(path);
    let manifest = fs::File::open(&mpath).map_err(file_err(&mpath))?;
    assemble(&bytes, manifest)
}
