//! The adaptation regimes: one-step alignment against the final domain,
//! one-step alignment against the pooled union, and incremental warm-started
//! alignment domain by domain — each with retained-source or generated
//! "real" features.

use crate::adversarial::{adversarial_step, Adam, AdamConfig, LossWeights};
use crate::data::{Pool, RealizedDomain};
use crate::engine::buffer::SampleBuffer;
use crate::engine::provider::RealFeatures;
use crate::error::{Error, Result};
use crate::nets::ModelBundle;
use crate::runtime::{
    atomic_write, AccessAudit, MetricsRow, MetricsSink, Mode, RunConfig, SeedSplitter,
};
use crate::scalar::{real, Scalar};
use ndarray::{Array3, ArrayView3, Axis};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

/// Knobs of one adaptation run, extracted from the flat run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationConfig<F> {
    pub mode: Mode,
    pub sdm: bool,
    pub weights: LossWeights<F>,
    pub steps_per_domain: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub seed: u64,
    pub lr_discriminator: f64,
    pub lr_encoder: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl<F: Scalar> AdaptationConfig<F> {
    pub fn from_run(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(AdaptationConfig {
            mode: cfg.mode,
            sdm: cfg.sdm,
            weights: LossWeights::new(real::<F>(cfg.lambda_adv))?,
            steps_per_domain: cfg.steps_per_domain as u64,
            batch_size: cfg.batch_size,
            buffer_capacity: cfg.buffer_capacity,
            seed: cfg.seed,
            lr_discriminator: cfg.lr_discriminator,
            lr_encoder: cfg.lr_encoder,
            adam_beta1: cfg.adam_beta1,
            adam_beta2: cfg.adam_beta2,
            adam_eps: cfg.adam_eps,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps_per_domain == 0 {
            return Err(Error::invalid("steps_per_domain must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(Error::invalid(format!(
                "buffer capacity {} is below batch size {}",
                self.buffer_capacity, self.batch_size
            )));
        }
        if self.lr_discriminator <= 0.0 || self.lr_encoder <= 0.0 {
            return Err(Error::invalid("learning rates must be positive"));
        }
        Ok(())
    }
}

/// What one planned stage adapts against.
#[derive(Debug, Clone, Copy, PartialEq)]
enum StageData {
    /// Index into the domain sequence.
    Single(usize),
    /// Uniform mixture of every domain in the sequence.
    Union,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Stage {
    data: StageData,
    steps: u64,
    /// The domain index reported and used for checkpoint naming; one-step
    /// modes carry the final domain's index.
    label_index: usize,
    factor: f64,
}

/// Every mode spends the same total budget: K × steps_per_domain.
fn plan_stages<F: Scalar>(
    mode: Mode,
    domains: &[RealizedDomain<F>],
    steps_per_domain: u64,
) -> Vec<Stage> {
    let k = domains.len();
    let last = k - 1;
    let total = steps_per_domain * k as u64;
    match mode {
        Mode::Ada => vec![Stage {
            data: StageData::Single(last),
            steps: total,
            label_index: last,
            factor: domains[last].spec.factor,
        }],
        Mode::AdaUnion => vec![Stage {
            data: StageData::Union,
            steps: total,
            label_index: last,
            factor: domains[last].spec.factor,
        }],
        Mode::Iada => domains
            .iter()
            .enumerate()
            .map(|(i, d)| Stage {
                data: StageData::Single(i),
                steps: steps_per_domain,
                label_index: i,
                factor: d.spec.factor,
            })
            .collect(),
    }
}

/// Concatenate all domains into one image stack (domain order preserved) for
/// union-mode sampling.
fn build_union<F: Scalar>(domains: &[RealizedDomain<F>]) -> Array3<F> {
    let views: Vec<ArrayView3<F>> = domains.iter().map(|d| d.images.view()).collect();
    ndarray::concatenate(Axis(0), &views).expect("domains share the image shape")
}

/// Per-stage record: what was adapted, how it scored, and the hashes that
/// prove the warm-start chain and the freeze contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainOutcome {
    pub index: usize,
    pub factor: f64,
    /// "single" or "union".
    pub data: String,
    pub steps: u64,
    pub accuracy: Option<f64>,
    /// θ_{E_t} / θ_D hashes entering the stage (warm-start evidence).
    pub encoder_hash_in: u64,
    pub discriminator_hash_in: u64,
    /// Hashes leaving the stage.
    pub encoder_hash_out: u64,
    pub discriminator_hash_out: u64,
    pub source_reads: u64,
    /// In-memory diagnostic only — excluded from the persisted record so the
    /// same config and seed always produce a byte-identical summary file.
    #[serde(skip)]
    pub wall_secs: f64,
    pub checkpoint: Option<String>,
}

/// Full record of one adaptation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub mode: Mode,
    pub sdm: bool,
    pub lambda_adv: f64,
    pub seed: u64,
    pub total_steps: u64,
    /// θ_{E_s} / θ_S hashes, identical before and after by contract.
    pub source_encoder_hash: u64,
    pub head_hash: u64,
    pub domains: Vec<DomainOutcome>,
    pub warnings: Vec<String>,
    /// Source-dataset reads per audit phase at the end of the run.
    pub audit: std::collections::BTreeMap<String, u64>,
}

impl RunRecord {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("cannot encode run record: {e}")))?;
        atomic_write(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<RunRecord> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::MissingPrerequisite(format!("cannot read {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("malformed run record {}: {e}", path.display())))
    }

    /// Accuracy recorded for the final adapted domain, if the eval hook
    /// supplied one.
    pub fn final_accuracy(&self) -> Option<f64> {
        self.domains.last().and_then(|d| d.accuracy)
    }
}

/// Called after each adapted domain with the frozen bundle; returns the
/// accuracy to record for that row, or `None` to skip evaluation.
pub type EvalHook<'a, F> = &'a mut dyn FnMut(usize, f64, &ModelBundle<F>) -> Result<Option<f64>>;

/// Run one adaptation regime over a realized domain sequence.
///
/// `source_pool` supplies real-class features when `sdm` is off and must be
/// `Some`; with `sdm` on it is never touched (pass `None` to prove it).
/// Checkpoints land in `ckpt_dir` as `ckpt_domain_<k>` when given.
pub fn adapt<F: Scalar>(
    bundle: &mut ModelBundle<F>,
    source_pool: Option<&Pool<F>>,
    domains: &[RealizedDomain<F>],
    cfg: &AdaptationConfig<F>,
    audit: &AccessAudit,
    sink: &mut dyn MetricsSink,
    ckpt_dir: Option<&Path>,
    mut eval_hook: Option<EvalHook<'_, F>>,
) -> Result<RunRecord> {
    cfg.validate()?;
    if domains.is_empty() {
        return Err(Error::invalid("adaptation needs at least one domain"));
    }
    if cfg.sdm && bundle.generator.is_none() {
        return Err(Error::MissingPrerequisite(
            "adaptation with source distribution modelling needs a trained generator".into(),
        ));
    }
    if !cfg.sdm && source_pool.is_none() {
        return Err(Error::MissingPrerequisite(
            "adaptation without source distribution modelling needs the source pool".into(),
        ));
    }

    let frozen = bundle.frozen_hashes();
    let splitter = SeedSplitter::new(cfg.seed);
    let stages = plan_stages(cfg.mode, domains, cfg.steps_per_domain);
    let union_images = matches!(cfg.mode, Mode::AdaUnion).then(|| build_union(domains));

    let mut d_opt = Adam::new(
        AdamConfig {
            lr: real::<F>(cfg.lr_discriminator),
            beta1: real::<F>(cfg.adam_beta1),
            beta2: real::<F>(cfg.adam_beta2),
            eps: real::<F>(cfg.adam_eps),
        },
        bundle.discriminator.params.len(),
    );
    let mut e_opt = Adam::new(
        AdamConfig {
            lr: real::<F>(cfg.lr_encoder),
            beta1: real::<F>(cfg.adam_beta1),
            beta2: real::<F>(cfg.adam_beta2),
            eps: real::<F>(cfg.adam_eps),
        },
        bundle.target_encoder.params.len(),
    );

    let mut outcomes = Vec::with_capacity(stages.len());
    let mut warnings = Vec::new();
    let mut global_step: u64 = 0;

    for (stage_idx, stage) in stages.iter().enumerate() {
        let started = Instant::now();
        let phase = format!("adapt/{}", stage.label_index);
        let encoder_hash_in = bundle.target_encoder.params.hash64();
        let discriminator_hash_in = bundle.discriminator.params.hash64();
        let reads_before = audit.count(&phase);

        // Stage data: one domain, or the pooled union. The union buffer is
        // sized to hold every pooled image so sampling stays uniform over
        // the whole mixture; a single domain uses the configured ring and
        // keeps streaming fresh images through it while stepping.
        let (images, stream_seed): (&Array3<F>, u64) = match stage.data {
            StageData::Single(i) => (
                &domains[i].images,
                splitter.derive("adapt-stream", stage_idx as u64),
            ),
            StageData::Union => (
                union_images.as_ref().expect("built for union mode"),
                splitter.derive("adapt-union-stream", stage_idx as u64),
            ),
        };
        let n = images.dim().0;
        let capacity = match stage.data {
            StageData::Single(_) => cfg.buffer_capacity,
            StageData::Union => n.max(cfg.batch_size),
        };
        let mut buffer = SampleBuffer::new(
            capacity,
            splitter.derive("adapt-buffer", stage_idx as u64),
        )?;
        let mut stream = crate::data::IndexStream::new(n, stream_seed);
        // full pass through the buffer before stepping
        let first_fill = stream.next_chunk(n);
        buffer.push_images(&take_rows(images, &first_fill).view());
        let refresh = n > capacity;

        let mut provider: RealFeatures<'_, F> = if cfg.sdm {
            RealFeatures::generated(
                bundle.generator.as_ref().expect("checked above"),
                splitter.rng("adapt-noise", stage_idx as u64),
            )
        } else {
            RealFeatures::source(
                &bundle.source_encoder,
                source_pool.expect("checked above"),
                audit,
                phase.clone(),
                splitter.derive("adapt-source", stage_idx as u64),
            )?
        };

        for _ in 0..stage.steps {
            if refresh {
                let chunk = stream.next_chunk(cfg.batch_size);
                buffer.push_images(&take_rows(images, &chunk).view());
            }
            let target_batch = buffer.sample(cfg.batch_size)?;
            let f_real = provider.next(cfg.batch_size)?;
            let report = adversarial_step(
                &mut bundle.discriminator,
                &mut d_opt,
                &mut bundle.target_encoder,
                &mut e_opt,
                &f_real.view(),
                &target_batch.images.view(),
                &cfg.weights,
                global_step,
            )
            .map_err(|e| e.with_phase(&phase, global_step))?;
            sink.record(&MetricsRow::from(&report.telemetry(&phase)))?;
            global_step += 1;
        }
        drop(provider);

        if bundle.frozen_hashes() != frozen {
            return Err(Error::Invariant(format!(
                "source encoder or head moved during {phase}"
            )));
        }
        if cfg.sdm {
            let reads = audit.count_prefix("adapt");
            if reads != 0 {
                return Err(Error::Invariant(format!(
                    "{reads} source reads recorded during an adaptation that models \
                     the source distribution"
                )));
            }
        }

        let checkpoint = match ckpt_dir {
            Some(dir) => {
                let name = format!("ckpt_domain_{}", stage.label_index);
                bundle.save(
                    &dir.join(&name),
                    &format!("adapt-{}-domain-{}", cfg.mode.as_str(), stage.label_index),
                    cfg.seed,
                )?;
                Some(name)
            }
            None => None,
        };

        let accuracy = match eval_hook.as_mut() {
            Some(hook) => hook(stage.label_index, stage.factor, bundle)?,
            None => None,
        };

        outcomes.push(DomainOutcome {
            index: stage.label_index,
            factor: stage.factor,
            data: match stage.data {
                StageData::Single(_) => "single".into(),
                StageData::Union => "union".into(),
            },
            steps: stage.steps,
            accuracy,
            encoder_hash_in,
            discriminator_hash_in,
            encoder_hash_out: bundle.target_encoder.params.hash64(),
            discriminator_hash_out: bundle.discriminator.params.hash64(),
            source_reads: audit.count(&phase) - reads_before,
            wall_secs: started.elapsed().as_secs_f64(),
            checkpoint,
        });
        if !bundle.target_encoder.params.all_finite() {
            warnings.push(format!("non-finite target encoder after {phase}"));
        }
    }

    sink.flush()?;
    Ok(RunRecord {
        mode: cfg.mode,
        sdm: cfg.sdm,
        lambda_adv: cfg.weights.lambda_adv.to_f64().unwrap_or(f64::NAN),
        seed: cfg.seed,
        total_steps: global_step,
        source_encoder_hash: frozen.0,
        head_hash: frozen.1,
        domains: outcomes,
        warnings,
        audit: audit.snapshot(),
    })
}

/// Gather the given rows of an image stack into a new contiguous stack.
fn take_rows<F: Scalar>(images: &Array3<F>, indices: &[usize]) -> Array3<F> {
    let (_, h, w) = images.dim();
    let mut out = Array3::zeros((indices.len(), h, w));
    for (row, &i) in indices.iter().enumerate() {
        out.index_axis_mut(Axis(0), row)
            .assign(&images.index_axis(Axis(0), i));
    }
    out
}

/// Fraction of argmax-correct predictions over a labeled image stack, using
/// the deployment path (target encoder → head) or the source baseline.
pub fn evaluate<F: Scalar>(
    bundle: &ModelBundle<F>,
    images: &ArrayView3<F>,
    labels: &[u8],
    use_target_encoder: bool,
    batch: usize,
) -> Result<f64> {
    let n = images.dim().0;
    if n == 0 || batch == 0 {
        return Err(Error::invalid("evaluation needs a nonempty stream"));
    }
    if labels.len() != n {
        return Err(Error::invalid(format!(
            "{} labels for {n} images",
            labels.len()
        )));
    }
    let encoder = if use_target_encoder {
        &bundle.target_encoder
    } else {
        &bundle.source_encoder
    };
    let mut correct = 0usize;
    let mut at = 0usize;
    while at < n {
        let hi = (at + batch).min(n);
        let chunk = images.slice(ndarray::s![at..hi, .., ..]);
        let features = encoder.encode(&chunk)?;
        let logits = bundle.head.logits(&features.view())?;
        for (row, &label) in logits.axis_iter(Axis(0)).zip(&labels[at..hi]) {
            let mut best = 0usize;
            for (j, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = j;
                }
            }
            if best == label as usize {
                correct += 1;
            }
        }
        at = hi;
    }
    Ok(correct as f64 / n as f64)
}

/// Evaluate a realized (labeled) domain.
pub fn evaluate_domain<F: Scalar>(
    bundle: &ModelBundle<F>,
    domain: &RealizedDomain<F>,
    use_target_encoder: bool,
    batch: usize,
) -> Result<f64> {
    let labels = domain.labels.as_ref().ok_or_else(|| {
        Error::State("evaluation needs a labeled domain realization".into())
    })?;
    evaluate(bundle, &domain.images.view(), labels, use_target_encoder, batch)
}
