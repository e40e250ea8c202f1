//! The two source-side phases: supervised training of encoder + head, and
//! the feature GAN that learns to imitate the frozen source encoding.

use crate::adversarial::{adversarial_step, supervised_loss_grads, Adam, AdamConfig, LossWeights};
use crate::data::Pool;
use crate::error::{Error, Result};
use crate::nets::{noise_as_inputs, ModelBundle};
use crate::runtime::{AccessAudit, MetricsRow, MetricsSink, RunConfig, SeedSplitter};
use crate::scalar::{real, Scalar};
use ndarray::Axis;

/// Outcome of the supervised source phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceTrainReport {
    pub steps: u64,
    pub final_loss: f64,
}

/// Outcome of the source-GAN phase, including the mode-collapse probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GanTrainReport {
    pub steps: u64,
    pub mean_d_on_generated: f64,
    pub generated_variance: f64,
    pub real_variance: f64,
    pub mode_collapse_warning: bool,
}

/// Supervised optimization of the source encoder and head, then a fresh
/// clone of the source encoder into the target slot so adaptation starts
/// from the supervised solution.
pub fn train_source<F: Scalar>(
    bundle: &mut ModelBundle<F>,
    pool: &Pool<F>,
    cfg: &RunConfig,
    audit: &AccessAudit,
    sink: &mut dyn MetricsSink,
) -> Result<SourceTrainReport> {
    cfg.validate()?;
    if pool.len() < cfg.batch_size {
        return Err(Error::Resource(format!(
            "source pool has {} images, batch size is {}",
            pool.len(),
            cfg.batch_size
        )));
    }
    let adam = AdamConfig::new(cfg.lr_source)
        .with_beta1(cfg.source_beta1);
    let mut enc_opt = Adam::new(adam, bundle.source_encoder.params.len());
    let mut head_opt = Adam::new(adam, bundle.head.params.len());

    let splitter = SeedSplitter::new(cfg.seed);
    let mut stream =
        crate::data::IndexStream::new(pool.len(), splitter.derive("source-stream", 0));
    let steps_per_epoch = (pool.len() / cfg.batch_size).max(1) as u64;
    let total_steps = steps_per_epoch * cfg.source_epochs as u64;

    let mut final_loss = f64::NAN;
    for step in 0..total_steps {
        let indices = stream.next_chunk(cfg.batch_size);
        audit.record("source", cfg.batch_size as u64);
        let batch = pool.batch(&indices);

        let (features, cache) = bundle.source_encoder.forward_cached(&batch.images.view())?;
        let (loss, d_logits) =
            supervised_loss_grads(&bundle.head, &features.view(), &batch.labels)
                .map_err(|e| e.with_phase("source", step))?;
        let (head_grads, d_features) = bundle.head.backward(&features.view(), &d_logits.view());
        let enc_grads = bundle.source_encoder.backward_cached(&cache, &d_features);
        head_opt.step(&mut bundle.head.params, &head_grads)?;
        enc_opt.step(&mut bundle.source_encoder.params, &enc_grads)?;

        final_loss = loss.to_f64().unwrap_or(f64::NAN);
        sink.record(&MetricsRow {
            step,
            phase: "source".into(),
            loss_d: 0.0,
            loss_e: final_loss,
            d_real_mean: 0.0,
            d_fake_mean: 0.0,
        })?;
        if !bundle.source_encoder.params.all_finite() || !bundle.head.params.all_finite() {
            return Err(Error::Numerical {
                message: "source training diverged (non-finite parameters)".into(),
                telemetry: crate::error::StepTelemetry {
                    phase: "source".into(),
                    step,
                    loss_e_or_g: final_loss,
                    ..Default::default()
                },
            });
        }
    }
    bundle.clone_source_into_target();
    sink.flush()?;
    Ok(SourceTrainReport {
        steps: total_steps,
        final_loss,
    })
}

/// Adversarial training of the feature generator against the frozen source
/// encoding. The discriminator trained here is retained so later runs that
/// model the source distribution can warm-start from it.
pub fn train_source_gan<F: Scalar>(
    bundle: &mut ModelBundle<F>,
    pool: &Pool<F>,
    cfg: &RunConfig,
    audit: &AccessAudit,
    sink: &mut dyn MetricsSink,
) -> Result<GanTrainReport> {
    cfg.validate()?;
    let frozen = bundle.frozen_hashes();
    let splitter = SeedSplitter::new(cfg.seed);
    let mut noise_rng = splitter.rng("gan-noise", 0);
    let mut stream =
        crate::data::IndexStream::new(pool.len(), splitter.derive("gan-stream", 0));

    let ModelBundle {
        source_encoder,
        head: _,
        discriminator,
        generator,
        ..
    } = bundle;
    let generator = generator.as_mut().ok_or_else(|| {
        Error::MissingPrerequisite("source-GAN training needs a generator in the bundle".into())
    })?;

    let mut d_opt = Adam::new(
        AdamConfig::new(cfg.lr_discriminator).with_beta1(cfg.adam_beta1),
        discriminator.params.len(),
    );
    let mut g_opt = Adam::new(
        AdamConfig::new(cfg.lr_generator).with_beta1(cfg.adam_beta1),
        generator.params.len(),
    );
    // The generator objective carries the same adversarial weight as the
    // adaptation phases; with an adaptive-moment optimizer the scale mostly
    // cancels, but keeping it uniform makes the phases comparable.
    let weights = LossWeights::new(real::<F>(cfg.lambda_adv))?;

    for step in 0..cfg.source_gan_steps as u64 {
        let indices = stream.next_chunk(cfg.batch_size);
        audit.record("source-gan", cfg.batch_size as u64);
        let images = pool.batch(&indices).images;
        let f_s = source_encoder.encode(&images.view())?;
        let noise = generator.sample_noise(cfg.batch_size, &mut noise_rng);
        let inputs = noise_as_inputs(noise);
        let report = adversarial_step(
            discriminator,
            &mut d_opt,
            generator,
            &mut g_opt,
            &f_s.view(),
            &inputs.view(),
            &weights,
            step,
        )
        .map_err(|e| e.with_phase("source-gan", step))?;
        sink.record(&MetricsRow::from(&report.telemetry("source-gan")))?;
    }

    // Equilibrium / mode-collapse probe on held-out-sized batches.
    let probe = 256.min(pool.len());
    let indices = stream.next_chunk(probe);
    audit.record("source-gan", probe as u64);
    let f_s = source_encoder.encode(&pool.batch(&indices).images.view())?;
    let noise = generator.sample_noise(probe, &mut noise_rng);
    let f_g = generator.generate(&noise.view())?;
    let d_probs = discriminator.discriminate(&f_g.view())?;
    let mean_d = d_probs.iter().map(|p| p.to_f64().unwrap()).sum::<f64>() / probe as f64;
    let real_variance = total_variance(&f_s);
    let generated_variance = total_variance(&f_g);
    let mode_collapse_warning = generated_variance < 1e-4 * real_variance;

    if bundle.frozen_hashes() != frozen {
        return Err(Error::Invariant(
            "source encoder or head moved during GAN training".into(),
        ));
    }
    sink.flush()?;
    Ok(GanTrainReport {
        steps: cfg.source_gan_steps as u64,
        mean_d_on_generated: mean_d,
        generated_variance,
        real_variance,
        mode_collapse_warning,
    })
}

/// Mean per-dimension variance of a feature matrix, as a scalar spread
/// measure for the collapse probe.
fn total_variance<F: Scalar>(features: &ndarray::Array2<F>) -> f64 {
    let (b, d) = features.dim();
    if b < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    for col in features.axis_iter(Axis(1)) {
        let mean = col.iter().map(|v| v.to_f64().unwrap()).sum::<f64>() / b as f64;
        acc += col
            .iter()
            .map(|v| (v.to_f64().unwrap() - mean).powi(2))
            .sum::<f64>()
            / (b - 1) as f64;
    }
    acc / d as f64
}
