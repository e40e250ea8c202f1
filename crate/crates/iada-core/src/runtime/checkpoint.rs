//! Checkpoint files: JSON manifest + raw little-endian f32 payload.
//!
//! Layout: magic `IADA`, format version (u32 LE), manifest length (u64 LE),
//! manifest JSON, then each component's parameters as f32 LE in manifest
//! order. The manifest records component names, tensor shapes, the root
//! seed, and a training-stage tag so downstream commands can check their
//! prerequisites. Writes go through the atomic temp-then-rename path.

use crate::error::{Error, Result};
use crate::nn::ParamSet;
use crate::runtime::fsutil;
use crate::scalar::{real, Scalar};
use serde::{Deserialize, Serialize};
use std::path::Path;

const MAGIC: &[u8; 4] = b"IADA";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorManifest {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentManifest {
    pub name: String,
    pub tensors: Vec<TensorManifest>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    /// Producing stage: `source`, `source-gan`, or `adapt/<k>`.
    pub stage: String,
    /// Root seed of the producing run.
    pub seed: u64,
    pub components: Vec<ComponentManifest>,
}

fn component_manifest<F: Scalar>(name: &str, params: &ParamSet<F>) -> ComponentManifest {
    ComponentManifest {
        name: name.to_string(),
        tensors: params
            .layout()
            .tensors()
            .iter()
            .map(|t| TensorManifest {
                name: t.name.to_string(),
                shape: t.shape.clone(),
            })
            .collect(),
    }
}

/// Serialize named parameter sets to `path` atomically.
pub fn save_checkpoint<F: Scalar>(
    path: &Path,
    stage: &str,
    seed: u64,
    components: &[(&str, &ParamSet<F>)],
) -> Result<()> {
    let manifest = CheckpointManifest {
        stage: stage.to_string(),
        seed,
        components: components
            .iter()
            .map(|(name, p)| component_manifest(name, p))
            .collect(),
    };
    let manifest_json = serde_json::to_vec(&manifest)
        .map_err(|e| Error::State(format!("manifest serialization: {e}")))?;
    let payload_len: usize = components.iter().map(|(_, p)| p.data().len()).sum();
    let mut bytes = Vec::with_capacity(16 + manifest_json.len() + payload_len * 4);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(manifest_json.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&manifest_json);
    for (_, params) in components {
        for &v in params.data() {
            let f = v.to_f32().unwrap_or(f32::NAN);
            bytes.extend_from_slice(&f.to_le_bytes());
        }
    }
    fsutil::atomic_write(path, &bytes)
}

/// Load a checkpoint into pre-shaped parameter sets (the caller builds them
/// from its architecture config). Component names and tensor shapes must
/// match the manifest exactly. Returns the manifest for stage checks.
pub fn load_checkpoint_into<F: Scalar>(
    path: &Path,
    components: &mut [(&str, &mut ParamSet<F>)],
) -> Result<CheckpointManifest> {
    if !path.exists() {
        return Err(Error::MissingPrerequisite(format!(
            "checkpoint {} not found (run the producing stage first)",
            path.display()
        )));
    }
    let bytes = std::fs::read(path)?;
    let bad = |msg: &str| Error::Config(format!("{}: {msg}", path.display()));
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(bad(&format!("unsupported format version {version}")));
    }
    let manifest_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let payload_start = 16 + manifest_len;
    if bytes.len() < payload_start {
        return Err(bad("truncated manifest"));
    }
    let manifest: CheckpointManifest = serde_json::from_slice(&bytes[16..payload_start])
        .map_err(|e| bad(&format!("bad manifest: {e}")))?;

    if manifest.components.len() != components.len() {
        return Err(bad(&format!(
            "expected {} components, file has {}",
            components.len(),
            manifest.components.len()
        )));
    }
    let mut offset = payload_start;
    for ((name, params), entry) in components.iter_mut().zip(&manifest.components) {
        if entry.name != *name {
            return Err(bad(&format!(
                "component order mismatch: expected `{name}`, found `{}`",
                entry.name
            )));
        }
        let expected = component_manifest(name, params);
        if expected.tensors != entry.tensors {
            return Err(bad(&format!("tensor shapes for `{name}` do not match")));
        }
        let n = params.data().len();
        let end = offset + n * 4;
        if bytes.len() < end {
            return Err(bad("truncated payload"));
        }
        for (dst, chunk) in params.data_mut().iter_mut().zip(bytes[offset..end].chunks_exact(4)) {
            let f = f32::from_le_bytes(chunk.try_into().unwrap());
            *dst = real::<F>(f as f64);
        }
        offset = end;
    }
    if offset != bytes.len() {
        return Err(bad("trailing bytes after payload"));
    }
    Ok(manifest)
}
