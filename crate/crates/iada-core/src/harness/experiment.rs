//! Experiment definitions: which regime/SDM cells to run, over which domain
//! ladder and seeds, plus the shared per-seed preparation (source training
//! and the source feature GAN).

use crate::data::{synthesize_dataset, Pool, Split};
use crate::engine::{train_source, train_source_gan, GanTrainReport, SourceTrainReport};
use crate::error::{Error, Result};
use crate::nets::ModelBundle;
use crate::runtime::{AccessAudit, MetricsSink, Mode, RunConfig};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One column of the regime-comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellKind {
    OnlySource,
    Ada,
    AdaSdm,
    AdaUnion,
    Iada,
    IadaSdm,
}

impl CellKind {
    pub const ALL: [CellKind; 6] = [
        CellKind::OnlySource,
        CellKind::Ada,
        CellKind::AdaSdm,
        CellKind::AdaUnion,
        CellKind::Iada,
        CellKind::IadaSdm,
    ];

    /// Column header in the rendered table.
    pub fn title(&self) -> &'static str {
        match self {
            CellKind::OnlySource => "only source",
            CellKind::Ada => "ADA",
            CellKind::AdaSdm => "ADA SDM",
            CellKind::AdaUnion => "ADA Union",
            CellKind::Iada => "IADA",
            CellKind::IadaSdm => "IADA SDM",
        }
    }

    /// Adaptation regime behind the column; `None` for the untouched
    /// source baseline.
    pub fn regime(&self) -> Option<(Mode, bool)> {
        match self {
            CellKind::OnlySource => None,
            CellKind::Ada => Some((Mode::Ada, false)),
            CellKind::AdaSdm => Some((Mode::Ada, true)),
            CellKind::AdaUnion => Some((Mode::AdaUnion, false)),
            CellKind::Iada => Some((Mode::Iada, false)),
            CellKind::IadaSdm => Some((Mode::Iada, true)),
        }
    }

    /// Incremental columns report every domain row; one-step columns only
    /// the final row (the table's dashes).
    pub fn reports_all_rows(&self) -> bool {
        matches!(self, CellKind::OnlySource | CellKind::Iada | CellKind::IadaSdm)
    }

    pub fn uses_sdm(&self) -> bool {
        matches!(self.regime(), Some((_, true)))
    }
}

/// What to run: domain ladder, regime cells, and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub start_factor: f64,
    pub end_factor: f64,
    pub domain_count: usize,
    pub cells: Vec<CellKind>,
    pub seeds: Vec<u64>,
    pub desk_scale: bool,
}

impl ExperimentSpec {
    /// The regime-comparison experiment as configured.
    pub fn table(cfg: &RunConfig) -> Self {
        ExperimentSpec {
            name: format!("{}-table", cfg.name),
            start_factor: cfg.start_factor,
            end_factor: cfg.end_factor,
            domain_count: cfg.domain_count,
            cells: CellKind::ALL.to_vec(),
            seeds: cfg.seeds.clone(),
            desk_scale: cfg.desk_scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::invalid("experiment needs at least one seed"));
        }
        if self.cells.is_empty() {
            return Err(Error::invalid("experiment needs at least one cell"));
        }
        if self.domain_count == 0 {
            return Err(Error::invalid("experiment needs at least one domain"));
        }
        Ok(())
    }

    pub fn needs_sdm(&self) -> bool {
        self.cells.iter().any(|c| c.uses_sdm())
    }
}

/// The labeled base pools every experiment draws from.
pub struct BenchData<F> {
    pub train: Pool<F>,
    pub test: Pool<F>,
}

impl<F: Scalar> BenchData<F> {
    /// Load idx archives from a data directory, truncated to the configured
    /// desk-scale counts.
    pub fn load(dir: &Path, cfg: &RunConfig) -> Result<Self> {
        Ok(BenchData {
            train: Pool::load(dir, Split::Train, Some(cfg.train_count))?,
            test: Pool::load(dir, Split::Test, Some(cfg.test_count))?,
        })
    }

    /// Render fresh digits in memory — the test-suite path.
    pub fn synthesize(train_count: usize, test_count: usize, seed: u64) -> Result<Self> {
        let scale = |(images, labels): (ndarray::Array3<u8>, Vec<u8>)| {
            Pool::new(
                images.mapv(|v| crate::scalar::real::<F>(v as f64 / 255.0)),
                labels,
            )
        };
        Ok(BenchData {
            train: scale(synthesize_dataset(train_count, seed))?,
            test: scale(synthesize_dataset(test_count, seed ^ 0x9e37_79b9_7f4a_7c15))?,
        })
    }
}

/// Shared per-seed phases: supervised source training, then (when any cell
/// models the source distribution) the feature GAN on top of a snapshot.
pub struct SeedArtifacts<F: Scalar> {
    pub seed: u64,
    /// Trained source encoder + head, fresh discriminator, untouched
    /// generator slot — the starting point for plain adaptation cells.
    pub post_source: ModelBundle<F>,
    /// As above plus trained generator and the GAN-trained discriminator —
    /// the starting point for SDM cells.
    pub post_gan: Option<ModelBundle<F>>,
    pub source_report: SourceTrainReport,
    pub gan_report: Option<GanTrainReport>,
}

pub fn prepare_seed<F: Scalar>(
    cfg: &RunConfig,
    data: &BenchData<F>,
    with_gan: bool,
    audit: &AccessAudit,
    sink: &mut dyn MetricsSink,
    progress: &mut dyn FnMut(&str),
) -> Result<SeedArtifacts<F>> {
    let mut bundle = ModelBundle::<F>::init(cfg.seed, Some(cfg.noise_dim));
    let source_report = train_source(&mut bundle, &data.train, cfg, audit, sink)?;
    progress(&format!(
        "seed {}: source phase done ({} steps, final loss {:.4})",
        cfg.seed, source_report.steps, source_report.final_loss
    ));
    let post_source = bundle.clone();
    let (post_gan, gan_report) = if with_gan {
        let report = train_source_gan(&mut bundle, &data.train, cfg, audit, sink)?;
        progress(&format!(
            "seed {}: source-GAN phase done ({} steps, mean D(f_g) {:.3}{})",
            cfg.seed,
            report.steps,
            report.mean_d_on_generated,
            if report.mode_collapse_warning {
                ", WARNING: generator variance collapsed"
            } else {
                ""
            }
        ));
        (Some(bundle), Some(report))
    } else {
        (None, None)
    };
    Ok(SeedArtifacts {
        seed: cfg.seed,
        post_source,
        post_gan,
        source_report,
        gan_report,
    })
}
