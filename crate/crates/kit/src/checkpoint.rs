//! GHED head checkpoints.
//!
//! Layout, little-endian: `b"GHED"`, version `u16`, dim count `u16`, that many
//! `u32` layer widths starting with the feature dimension, then every
//! parameter as f64 in `W1, b1, W2, b2, W3, b3` order.

use std::fs;
use std::path::Path;

use grasp_core::flops::HEAD_WIDTHS;
use grasp_core::head::{param_count, DenseHead};

pub const MAGIC: &[u8; 4] = b"GHED";
pub const VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a GHED checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    VersionUnsupported(u16),
    #[error("layer widths {0:?} do not describe a grasp head")]
    BadDims(Vec<u32>),
    #[error("checkpoint is {actual} bytes, header implies {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("{}: {source}", path.display())]
    File { path: std::path::PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn file_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::File { path: path.to_path_buf(), source }
}

pub fn encode(head: &DenseHead) -> Vec<u8> {
    let dims = head.dims();
    let mut out = Vec::with_capacity(8 + dims.len() * 4 + head.params().len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(dims.len() as u16).to_le_bytes());
    for d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for p in head.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<DenseHead, CheckpointError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    if bytes.len() < 8 {
        return Err(CheckpointError::LengthMismatch { expected: 8, actual: bytes.len() });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(CheckpointError::VersionUnsupported(version));
    }
    let ndims = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let params_at = 8 + ndims * 4;
    if bytes.len() < params_at {
        return Err(CheckpointError::LengthMismatch { expected: params_at, actual: bytes.len() });
    }
    let dims: Vec<u32> =
        bytes[8..params_at].chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    if dims.len() != 4 || dims[0] == 0 || dims[1..].iter().zip(HEAD_WIDTHS).any(|(&d, w)| d as usize != w) {
        return Err(CheckpointError::BadDims(dims));
    }
    let feature_dim = dims[0] as usize;
    let expected = params_at + param_count(feature_dim) * 8;
    if bytes.len() != expected {
        return Err(CheckpointError::LengthMismatch { expected, actual: bytes.len() });
    }
    let params =
        bytes[params_at..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok(DenseHead::from_params(feature_dim, params).expect("length checked above"))
}

pub fn save(path: &Path, head: &DenseHead) -> Result<(), CheckpointError> {
    fs::write(path, encode(head)).map_err(file_err(path))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<DenseHead, CheckpointError> {
    decode(&fs::read(path).map_err(file_err(path))?)
}
