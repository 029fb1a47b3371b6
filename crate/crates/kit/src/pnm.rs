//! Binary PPM (P6) and PGM (P5) images with 8-bit samples.

use std::fs;
use std::path::Path;

use grasp_core::augment::{AugmentError, PixelGrid};

#[derive(Debug, thiserror::Error)]
pub enum PnmError {
    #[error("not a binary PPM/PGM file")]
    BadMagic,
    #[error("malformed header: {0}")]
    BadHeader(&'static str),
    #[error("only maxval 255 is supported, found {0}")]
    UnsupportedMaxval(usize),
    #[error("pixel data is {actual} bytes, header implies {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Grid(#[from] AugmentError),
    #[error("{}: {source}", path.display())]
    File { path: std::path::PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn file_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> PnmError + '_ {
    move |source| PnmError::File { path: path.to_path_buf(), source }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Result<usize, PnmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(PnmError::BadHeader("expected a decimal number"))
    }
}

pub fn decode(bytes: &[u8]) -> Result<PixelGrid, PnmError> {
    let channels = match bytes.get(..2) {
        Some(b"P6") => 3,
        Some(b"P5") => 1,
        _ => return Err(PnmError::BadMagic),
    };
    let mut h = Header { bytes, pos: 2 };
    let width = h.number()?;
    let height = h.number()?;
    let maxval = h.number()?;
    if maxval != 255 {
        return Err(PnmError::UnsupportedMaxval(maxval));
    }
    if !bytes.get(h.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(PnmError::BadHeader("missing separator before pixel data"));
    }
    let data = &bytes[h.pos + 1..];
    let expected = width * height * channels as usize;
    if data.len() != expected {
        return Err(PnmError::LengthMismatch { expected, actual: data.len() });
    }
    Ok(PixelGrid::new(width, height, channels, data.to_vec())?)
}

pub fn encode(img: &PixelGrid) -> Vec<u8> {
    let magic = if img.channels() == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

pub fn read(path: &Path) -> Result<PixelGrid, PnmError> {
    decode(&fs::read(path).map_err(file_err(path))?)
}

pub fn write(path: &Path, img: &PixelGrid) -> Result<(), PnmError> {
    fs::write(path, encode(img)).map_err(file_err(path))?;
    Ok(())
}
