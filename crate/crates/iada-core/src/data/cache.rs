//! On-disk cache for realized domains.
//!
//! Layout: magic `IADD`, version (u32 LE), factor (f64 LE), count (u32 LE),
//! height (u32 LE), width (u32 LE), stream seed (u64 LE), then the pixel
//! payload as f32 LE in `[N × H × W]` order. f32 matches the working
//! precision, so cached and freshly realized domains are interchangeable.

use crate::data::pool::RealizedDomain;
use crate::data::sequence::DomainSpec;
use crate::error::{Error, Result};
use crate::runtime::fsutil;
use crate::scalar::{real, Scalar};
use ndarray::Array3;
use std::path::{Path, PathBuf};

const MAGIC: &[u8; 4] = b"IADD";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 4 + 4 + 4 + 8;

/// Conventional cache file name for a domain.
pub fn cache_file_name(spec: &DomainSpec) -> String {
    format!("domain_{:02}_f{:.4}.bin", spec.index, spec.factor)
}

pub fn cache_path(dir: &Path, spec: &DomainSpec) -> PathBuf {
    dir.join(cache_file_name(spec))
}

pub fn write_domain_cache<F: Scalar>(path: &Path, domain: &RealizedDomain<F>) -> Result<()> {
    let (n, h, w) = domain.images.dim();
    let mut bytes = Vec::with_capacity(HEADER_LEN + n * h * w * 4);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&domain.spec.factor.to_le_bytes());
    bytes.extend_from_slice(&(n as u32).to_le_bytes());
    bytes.extend_from_slice(&(h as u32).to_le_bytes());
    bytes.extend_from_slice(&(w as u32).to_le_bytes());
    bytes.extend_from_slice(&domain.spec.seed.to_le_bytes());
    for &v in domain.images.iter() {
        bytes.extend_from_slice(&v.to_f32().unwrap_or(f32::NAN).to_le_bytes());
    }
    fsutil::atomic_write(path, &bytes)
}

/// Read a cached domain back; `index` restores the sequence position the
/// file name carries.
pub fn read_domain_cache<F: Scalar>(path: &Path, index: usize) -> Result<RealizedDomain<F>> {
    if !path.exists() {
        return Err(Error::Resource(format!(
            "domain cache {} not found",
            path.display()
        )));
    }
    let bytes = std::fs::read(path)?;
    let bad = |msg: &str| Error::Config(format!("{}: {msg}", path.display()));
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(bad("not a domain cache file"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let factor = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let n = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(bytes[20..24].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(bytes[24..28].try_into().unwrap()) as usize;
    let seed = u64::from_le_bytes(bytes[28..36].try_into().unwrap());
    if bytes.len() != HEADER_LEN + n * h * w * 4 {
        return Err(bad("payload length does not match header"));
    }
    let mut data = Vec::with_capacity(n * h * w);
    for chunk in bytes[HEADER_LEN..].chunks_exact(4) {
        let f = f32::from_le_bytes(chunk.try_into().unwrap());
        data.push(real::<F>(f as f64));
    }
    Ok(RealizedDomain {
        spec: DomainSpec::new(factor, index, seed)?,
        images: Array3::from_shape_vec((n, h, w), data).expect("length checked"),
        labels: None,
    })
}
