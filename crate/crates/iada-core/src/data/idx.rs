//! Reader/writer for the classic idx digit-archive layout: big-endian magic
//! and dimensions followed by row-major `u8` data. The standard four-file
//! naming (`train-images-idx3-ubyte`, …) is used, so an externally obtained
//! digit dataset can drop into the data directory unchanged.

use crate::error::{Error, Result};
use crate::runtime::fsutil;
use ndarray::Array3;
use std::path::{Path, PathBuf};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Which half of the archive to address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn images_file(&self) -> &'static str {
        match self {
            Split::Train => "train-images-idx3-ubyte",
            Split::Test => "t10k-images-idx3-ubyte",
        }
    }

    pub fn labels_file(&self) -> &'static str {
        match self {
            Split::Train => "train-labels-idx1-ubyte",
            Split::Test => "t10k-labels-idx1-ubyte",
        }
    }

    pub fn images_path(&self, dir: &Path) -> PathBuf {
        dir.join(self.images_file())
    }

    pub fn labels_path(&self, dir: &Path) -> PathBuf {
        dir.join(self.labels_file())
    }
}

pub fn write_idx_images(path: &Path, images: &Array3<u8>) -> Result<()> {
    let (n, h, w) = images.dim();
    let mut bytes = Vec::with_capacity(16 + n * h * w);
    bytes.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(n as u32).to_be_bytes());
    bytes.extend_from_slice(&(h as u32).to_be_bytes());
    bytes.extend_from_slice(&(w as u32).to_be_bytes());
    bytes.extend_from_slice(images.as_slice().expect("standard layout"));
    fsutil::atomic_write(path, &bytes)
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 + labels.len());
    bytes.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    bytes.extend_from_slice(labels);
    fsutil::atomic_write(path, &bytes)
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::Config(format!("{}: truncated header", path.display())))
}

pub fn read_idx_images(path: &Path) -> Result<Array3<u8>> {
    if !path.exists() {
        return Err(Error::Resource(format!(
            "image archive {} not found",
            path.display()
        )));
    }
    let bytes = std::fs::read(path)?;
    let magic = be_u32(&bytes, 0, path)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Config(format!(
            "{}: magic {magic:#010x} is not an idx3 image file",
            path.display()
        )));
    }
    let n = be_u32(&bytes, 4, path)? as usize;
    let h = be_u32(&bytes, 8, path)? as usize;
    let w = be_u32(&bytes, 12, path)? as usize;
    let expected = 16 + n * h * w;
    if bytes.len() != expected {
        return Err(Error::Config(format!(
            "{}: expected {expected} bytes, found {}",
            path.display(),
            bytes.len()
        )));
    }
    Ok(Array3::from_shape_vec((n, h, w), bytes[16..].to_vec()).expect("shape checked"))
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    if !path.exists() {
        return Err(Error::Resource(format!(
            "label archive {} not found",
            path.display()
        )));
    }
    let bytes = std::fs::read(path)?;
    let magic = be_u32(&bytes, 0, path)?;
    if magic != LABELS_MAGIC {
        return Err(Error::Config(format!(
            "{}: magic {magic:#010x} is not an idx1 label file",
            path.display()
        )));
    }
    let n = be_u32(&bytes, 4, path)? as usize;
    if bytes.len() != 8 + n {
        return Err(Error::Config(format!(
            "{}: expected {} bytes, found {}",
            path.display(),
            8 + n,
            bytes.len()
        )));
    }
    Ok(bytes[8..].to_vec())
}
