//! Flat run configuration, stored as TOML.
//!
//! One document drives the whole pipeline: data synthesis, source training,
//! the adaptation regimes, and the experiment harness. Unknown keys are
//! rejected so typos fail loudly; missing keys fall back to the defaults
//! below, which reproduce the desk-scale protocol.

use crate::error::{Error, Result};
use crate::runtime::fsutil;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Adaptation regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// One-step adaptation against the final domain only.
    Ada,
    /// One-step adaptation against the pooled union of all domains.
    AdaUnion,
    /// Incremental, warm-started adaptation along the whole sequence.
    Iada,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Ada, Mode::AdaUnion, Mode::Iada];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Ada => "ada",
            Mode::AdaUnion => "ada-union",
            Mode::Iada => "iada",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "ada" => Ok(Mode::Ada),
            "ada-union" | "ada_union" => Ok(Mode::AdaUnion),
            "iada" => Ok(Mode::Iada),
            other => Err(Error::invalid(format!(
                "unknown mode `{other}` (expected ada, ada-union, or iada)"
            ))),
        }
    }
}

/// Everything a run needs, flat so the TOML stays greppable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub name: String,
    pub mode: Mode,
    /// Replace retained source data with the feature generator.
    pub sdm: bool,
    /// Weight on the encoder/generator adversarial objective.
    pub lambda_adv: f64,
    pub steps_per_domain: usize,
    pub batch_size: usize,
    /// Target-sample ring buffer size (images).
    pub buffer_capacity: usize,
    /// Generator noise dimension.
    pub noise_dim: usize,
    /// Root seed; per-phase seeds derive from it.
    pub seed: u64,

    // optimizer settings (adaptive-moment)
    pub lr_discriminator: f64,
    pub lr_encoder: f64,
    pub lr_generator: f64,
    pub lr_source: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// β₁ for the plain supervised source phase.
    pub source_beta1: f64,

    // source phase budgets
    pub source_epochs: usize,
    pub source_gan_steps: usize,

    // domain sequence
    pub start_factor: f64,
    pub end_factor: f64,
    pub domain_count: usize,

    // experiment harness
    pub seeds: Vec<u64>,
    pub desk_scale: bool,
    pub train_count: usize,
    pub test_count: usize,

    // paths
    pub data_dir: PathBuf,
    pub checkpoint_dir: PathBuf,
    pub report_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            name: "run".into(),
            mode: Mode::Iada,
            sdm: false,
            lambda_adv: 1e-3,
            steps_per_domain: 400,
            batch_size: 64,
            buffer_capacity: 4096,
            noise_dim: 64,
            seed: 7,
            lr_discriminator: 2e-4,
            lr_encoder: 1e-4,
            lr_generator: 2e-4,
            lr_source: 1e-3,
            adam_beta1: 0.5,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            source_beta1: 0.9,
            source_epochs: 4,
            source_gan_steps: 1200,
            start_factor: 0.9,
            end_factor: 0.5,
            domain_count: 5,
            seeds: vec![1, 2, 3],
            desk_scale: true,
            train_count: 10_000,
            test_count: 2_000,
            data_dir: "data".into(),
            checkpoint_dir: "checkpoints".into(),
            report_dir: "report".into(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("config serialization: {e}")))?;
        fsutil::atomic_write(path, text.as_bytes())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_adv > 0.0) {
            return Err(Error::Config("lambda_adv must be > 0".into()));
        }
        if self.steps_per_domain == 0 {
            return Err(Error::Config("steps_per_domain must be ≥ 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be ≥ 1".into()));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(Error::Config(
                "buffer_capacity must be ≥ batch_size".into(),
            ));
        }
        if self.noise_dim == 0 {
            return Err(Error::Config("noise_dim must be ≥ 1".into()));
        }
        if !(self.end_factor > 0.0 && self.end_factor <= self.start_factor && self.start_factor <= 1.0)
        {
            return Err(Error::Config(
                "factors must satisfy 0 < end_factor ≤ start_factor ≤ 1".into(),
            ));
        }
        if self.domain_count == 0 {
            return Err(Error::Config("domain_count must be ≥ 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be non-empty".into()));
        }
        if self.train_count < self.batch_size || self.test_count == 0 {
            return Err(Error::Config(
                "train_count must cover a batch and test_count must be ≥ 1".into(),
            ));
        }
        for (name, lr) in [
            ("lr_discriminator", self.lr_discriminator),
            ("lr_encoder", self.lr_encoder),
            ("lr_generator", self.lr_generator),
            ("lr_source", self.lr_source),
        ] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite")));
            }
        }
        Ok(())
    }
}
