//! The training objectives, plus their gradient forms.

use crate::error::{Error, Result, StepTelemetry};
use crate::nets::{DiscriminatorParams, HeadParams, DISC_CLAMP};
use crate::nn::ParamSet;
use crate::scalar::{real, Scalar};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Weight on the encoder/generator adversarial objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights<F> {
    pub lambda_adv: F,
}

impl<F: Scalar> LossWeights<F> {
    pub fn new(lambda_adv: F) -> Result<Self> {
        if lambda_adv > F::zero() && lambda_adv.is_finite() {
            Ok(LossWeights { lambda_adv })
        } else {
            Err(Error::invalid(format!(
                "lambda_adv must be positive and finite, got {lambda_adv}"
            )))
        }
    }
}

impl<F: Scalar> Default for LossWeights<F> {
    fn default() -> Self {
        LossWeights {
            lambda_adv: real::<F>(1e-3),
        }
    }
}

fn ensure_finite<F: Scalar>(value: F, what: &str) -> Result<F> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numerical {
            message: format!("{what} is not finite ({value})"),
            telemetry: StepTelemetry::default(),
        })
    }
}

fn mean_neg_log<F: Scalar>(probs: &ArrayView1<F>) -> F {
    let b = real::<F>(probs.len() as f64);
    -probs.iter().map(|p| p.ln()).sum::<F>() / b
}

fn mean_neg_log_complement<F: Scalar>(probs: &ArrayView1<F>) -> F {
    let b = real::<F>(probs.len() as f64);
    -probs.iter().map(|&p| (F::one() - p).ln()).sum::<F>() / b
}

/// Confusion objective −E[log D(f)] shared by the target encoder and the
/// generator.
fn confusion_loss<F: Scalar>(
    disc: &DiscriminatorParams<F>,
    features: &ArrayView2<F>,
    what: &str,
) -> Result<F> {
    let probs = disc.discriminate(features)?;
    ensure_finite(mean_neg_log(&probs.view()), what)
}

/// Binary cross-entropy −E[log D(real)] − E[log(1 − D(fake))] shared by all
/// discriminator objectives. Batches must be balanced.
fn bce_loss<F: Scalar>(
    disc: &DiscriminatorParams<F>,
    f_real: &ArrayView2<F>,
    f_fake: &ArrayView2<F>,
    what: &str,
) -> Result<F> {
    if f_real.dim().0 != f_fake.dim().0 {
        return Err(Error::invalid(format!(
            "{what}: unbalanced batches ({} real vs {} fake)",
            f_real.dim().0,
            f_fake.dim().0
        )));
    }
    let p_real = disc.discriminate(f_real)?;
    let p_fake = disc.discriminate(f_fake)?;
    ensure_finite(
        mean_neg_log(&p_real.view()) + mean_neg_log_complement(&p_fake.view()),
        what,
    )
}

/// Target-encoder objective during adaptation: −E[log D(f_t)].
pub fn loss_target_encoder<F: Scalar>(
    disc: &DiscriminatorParams<F>,
    f_t: &ArrayView2<F>,
) -> Result<F> {
    confusion_loss(disc, f_t, "target-encoder loss")
}

/// Discriminator objective during adaptation: source features real, target
/// features fake.
pub fn loss_discriminator_features<F: Scalar>(
    disc: &DiscriminatorParams<F>,
    f_source: &ArrayView2<F>,
    f_target: &ArrayView2<F>,
) -> Result<F> {
    bce_loss(disc, f_source, f_target, "discriminator feature loss")
}

/// Generator objective during source-GAN training: −E[log D(f_g)].
pub fn loss_generator<F: Scalar>(
    disc: &DiscriminatorParams<F>,
    f_g: &ArrayView2<F>,
) -> Result<F> {
    confusion_loss(disc, f_g, "generator loss")
}

/// Discriminator objective during source-GAN training: source features
/// real, generated features fake.
pub fn loss_discriminator_gan<F: Scalar>(
    disc: &DiscriminatorParams<F>,
    f_s: &ArrayView2<F>,
    f_g: &ArrayView2<F>,
) -> Result<F> {
    bce_loss(disc, f_s, f_g, "discriminator GAN loss")
}

/// Target-encoder objective under source distribution modelling — same
/// confusion form, the difference is who the discriminator was trained
/// against.
pub fn loss_target_encoder_sdm<F: Scalar>(
    disc: &DiscriminatorParams<F>,
    f_t: &ArrayView2<F>,
) -> Result<F> {
    confusion_loss(disc, f_t, "SDM target-encoder loss")
}

/// Discriminator objective under source distribution modelling: generated
/// features take the "real" class, target features the fake class.
pub fn loss_discriminator_sdm<F: Scalar>(
    disc: &DiscriminatorParams<F>,
    f_g: &ArrayView2<F>,
    f_t: &ArrayView2<F>,
) -> Result<F> {
    bce_loss(disc, f_g, f_t, "SDM discriminator loss")
}

/// Softmax cross-entropy of the supervised head.
pub fn supervised_loss<F: Scalar>(
    head: &HeadParams<F>,
    features: &ArrayView2<F>,
    labels: &[u8],
) -> Result<F> {
    Ok(supervised_loss_grads(head, features, labels)?.0)
}

/// Supervised loss together with its gradient on the logits
/// (`(softmax − onehot)/B`), for the source training step.
pub fn supervised_loss_grads<F: Scalar>(
    head: &HeadParams<F>,
    features: &ArrayView2<F>,
    labels: &[u8],
) -> Result<(F, Array2<F>)> {
    let b = features.dim().0;
    if labels.len() != b {
        return Err(Error::invalid(format!(
            "{} labels for {b} samples",
            labels.len()
        )));
    }
    let probs = head.classify(features)?;
    if labels.iter().any(|&l| (l as usize) >= probs.dim().1) {
        return Err(Error::invalid("label out of range"));
    }
    let scale = real::<F>(1.0 / b as f64);
    let mut loss = F::zero();
    let mut d_logits = probs.clone();
    for (i, &label) in labels.iter().enumerate() {
        let p = probs[(i, label as usize)].max(real::<F>(DISC_CLAMP));
        loss -= p.ln();
        d_logits[(i, label as usize)] -= F::one();
    }
    d_logits.mapv_inplace(|v| v * scale);
    Ok((ensure_finite(loss * scale, "supervised loss")?, d_logits))
}

/// Gradient of the pre-sigmoid logits for the "real" side of the BCE,
/// −(1/B)·d log D: `(σ(a) − 1)/B`. Computed in logit space, where the
/// derivative is bounded in (−1, 0) — the output clamp stays a value-side
/// safety device so a saturated discriminator still emits a usable signal.
pub(crate) fn d_logits_real_side<F: Scalar>(logits: &ArrayView1<F>) -> Array1<F> {
    let b = real::<F>(logits.len() as f64);
    logits.mapv(|a| (crate::nn::ops::sigmoid(a) - F::one()) / b)
}

/// Fake-side counterpart, −(1/B)·d log(1 − D): `σ(a)/B`, bounded in (0, 1).
pub(crate) fn d_logits_fake_side<F: Scalar>(logits: &ArrayView1<F>) -> Array1<F> {
    let b = real::<F>(logits.len() as f64);
    logits.mapv(|a| crate::nn::ops::sigmoid(a) / b)
}

/// Gradient of the confusion loss on the producer's features, treating the
/// discriminator as a constant. Returns `(loss, mean D, d_features)`.
pub fn confusion_grads_on_features<F: Scalar>(
    disc: &DiscriminatorParams<F>,
    features: &ArrayView2<F>,
    what: &str,
) -> Result<(F, F, Array2<F>)> {
    let cache = disc.forward_cached(features)?;
    let loss = ensure_finite(mean_neg_log(&cache.probs.view()), what)?;
    let mean_d = cache.probs.sum() / real::<F>(cache.probs.len() as f64);
    let d_logits = d_logits_real_side(&cache.logits.view());
    let (_, d_features) = disc.backward(&cache, &d_logits);
    Ok((loss, mean_d, d_features))
}

/// Gradients of the BCE on the discriminator parameters. Returns
/// `(loss, mean D(real), mean D(fake), grads)`.
pub fn bce_grads_on_disc<F: Scalar>(
    disc: &DiscriminatorParams<F>,
    f_real: &ArrayView2<F>,
    f_fake: &ArrayView2<F>,
    what: &str,
) -> Result<(F, F, F, ParamSet<F>)> {
    if f_real.dim().0 != f_fake.dim().0 {
        return Err(Error::invalid(format!(
            "{what}: unbalanced batches ({} real vs {} fake)",
            f_real.dim().0,
            f_fake.dim().0
        )));
    }
    let real_cache = disc.forward_cached(f_real)?;
    let fake_cache = disc.forward_cached(f_fake)?;
    let loss = ensure_finite(
        mean_neg_log(&real_cache.probs.view())
            + mean_neg_log_complement(&fake_cache.probs.view()),
        what,
    )?;
    let mean_real = real_cache.probs.sum() / real::<F>(real_cache.probs.len() as f64);
    let mean_fake = fake_cache.probs.sum() / real::<F>(fake_cache.probs.len() as f64);
    let (mut grads, _) = disc.backward(&real_cache, &d_logits_real_side(&real_cache.logits.view()));
    let (fake_grads, _) =
        disc.backward(&fake_cache, &d_logits_fake_side(&fake_cache.logits.view()));
    grads.add_assign(&fake_grads);
    Ok((loss, mean_real, mean_fake, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::FEATURE_DIM;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_features<F: Scalar>(seed: u64, b: usize) -> Array2<F> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((b, FEATURE_DIM), |_| real::<F>(rng.random::<f64>() * 2.0 - 1.0))
    }

    /// Constant-output discriminator: zero weights, fixed final bias.
    fn constant_disc<F: Scalar>(bias: f64) -> DiscriminatorParams<F> {
        let mut disc = DiscriminatorParams::zeros();
        disc.params.vec1_mut("b3").fill(real::<F>(bias));
        disc
    }

    fn equilibrium_checks<F: Scalar>(tol: f64) {
        let disc = constant_disc::<F>(0.0); // D ≡ 0.5 everywhere
        let a = random_features::<F>(1, 8);
        let b = random_features::<F>(2, 8);
        let ln2 = std::f64::consts::LN_2;
        for loss in [
            loss_target_encoder(&disc, &a.view()).unwrap(),
            loss_generator(&disc, &a.view()).unwrap(),
            loss_target_encoder_sdm(&disc, &a.view()).unwrap(),
        ] {
            assert!((loss.to_f64().unwrap() - ln2).abs() < tol, "{loss} vs ln 2");
        }
        for loss in [
            loss_discriminator_features(&disc, &a.view(), &b.view()).unwrap(),
            loss_discriminator_gan(&disc, &a.view(), &b.view()).unwrap(),
            loss_discriminator_sdm(&disc, &a.view(), &b.view()).unwrap(),
        ] {
            assert!(
                (loss.to_f64().unwrap() - 2.0 * ln2).abs() < tol,
                "{loss} vs 2 ln 2"
            );
        }
    }

    #[test]
    fn equilibrium_constants_f32() {
        equilibrium_checks::<f32>(1e-6);
    }

    #[test]
    fn equilibrium_constants_f64() {
        equilibrium_checks::<f64>(1e-6);
    }

    #[test]
    fn limit_cases_track_the_clamp() {
        let f = random_features::<f64>(3, 6);
        // D ≡ 1−ε: confusion loss collapses toward 0
        let sure = constant_disc::<f64>(40.0);
        assert!(loss_target_encoder(&sure, &f.view()).unwrap() < 1e-6);
        // D ≡ ε on generated: generator loss ≈ −ln ε
        let dismissive = constant_disc::<f64>(-40.0);
        let loss = loss_generator(&dismissive, &f.view()).unwrap();
        assert!((loss - -(DISC_CLAMP.ln())).abs() < 1e-9, "{loss}");
        // a discriminator keyed on feature 0 separates ±1 batches almost
        // perfectly → BCE near 0
        let mut sharp = DiscriminatorParams::<f64>::zeros();
        sharp.params.mat_mut("w1")[(0, 0)] = 40.0;
        sharp.params.mat_mut("w2")[(0, 0)] = 1.0;
        sharp.params.mat_mut("w3")[(0, 0)] = 1.0;
        sharp.params.vec1_mut("b3")[0] = -10.0;
        let mut pos = Array2::<f64>::zeros((6, FEATURE_DIM));
        pos.column_mut(0).fill(1.0);
        let mut neg = Array2::<f64>::zeros((6, FEATURE_DIM));
        neg.column_mut(0).fill(-1.0);
        let loss = loss_discriminator_features(&sharp, &pos.view(), &neg.view()).unwrap();
        assert!(loss < 1e-4, "{loss}");
    }

    #[test]
    fn losses_match_per_sample_resummation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let disc = DiscriminatorParams::<f64>::init(&mut rng);
        let f = random_features::<f64>(6, 9);
        let g = random_features::<f64>(7, 9);
        let p_f = disc.discriminate(&f.view()).unwrap();
        let p_g = disc.discriminate(&g.view()).unwrap();

        let oracle_conf = -p_f.iter().map(|p| p.ln()).sum::<f64>() / 9.0;
        for loss in [
            loss_target_encoder(&disc, &f.view()).unwrap(),
            loss_generator(&disc, &f.view()).unwrap(),
            loss_target_encoder_sdm(&disc, &f.view()).unwrap(),
        ] {
            assert!((loss - oracle_conf).abs() < 1e-12);
        }

        let oracle_bce = -p_f.iter().map(|p| p.ln()).sum::<f64>() / 9.0
            - p_g.iter().map(|p| (1.0 - p).ln()).sum::<f64>() / 9.0;
        for loss in [
            loss_discriminator_features(&disc, &f.view(), &g.view()).unwrap(),
            loss_discriminator_gan(&disc, &f.view(), &g.view()).unwrap(),
            loss_discriminator_sdm(&disc, &f.view(), &g.view()).unwrap(),
        ] {
            assert!((loss - oracle_bce).abs() < 1e-12);
        }
    }

    #[test]
    fn label_flip_equals_argument_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let disc = DiscriminatorParams::<f64>::init(&mut rng);
        let a = random_features::<f64>(9, 7);
        let b = random_features::<f64>(10, 7);
        // flipped labels: a is the fake class, b the real class
        let p_a = disc.discriminate(&a.view()).unwrap();
        let p_b = disc.discriminate(&b.view()).unwrap();
        let flipped = -p_b.iter().map(|p| p.ln()).sum::<f64>() / 7.0
            - p_a.iter().map(|p| (1.0 - p).ln()).sum::<f64>() / 7.0;
        let swapped = loss_discriminator_features(&disc, &b.view(), &a.view()).unwrap();
        assert!((flipped - swapped).abs() < 1e-6);
    }

    #[test]
    fn unbalanced_batches_rejected() {
        let disc = DiscriminatorParams::<f64>::zeros();
        let a = random_features::<f64>(1, 4);
        let b = random_features::<f64>(2, 5);
        assert!(matches!(
            loss_discriminator_features(&disc, &a.view(), &b.view()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn supervised_loss_limits_and_oracle() {
        let head = HeadParams::<f64>::zeros();
        let f = random_features::<f64>(11, 5);
        let labels = [0u8, 3, 9, 1, 4];
        // uniform predictions → ln 10
        let loss = supervised_loss(&head, &f.view(), &labels).unwrap();
        assert!((loss - 10.0f64.ln()).abs() < 1e-6);

        // near-one-hot predictions → loss ≈ 0
        let mut confident = HeadParams::<f64>::zeros();
        for c in 0..10 {
            confident.params.mat_mut("w")[(c, c)] = 60.0;
        }
        let mut onehot_feats = Array2::<f64>::zeros((5, FEATURE_DIM));
        for (i, &l) in labels.iter().enumerate() {
            onehot_feats[(i, l as usize)] = 1.0;
        }
        let loss = supervised_loss(&confident, &onehot_feats.view(), &labels).unwrap();
        assert!(loss < 1e-9, "{loss}");

        // random case matches independent per-sample NLL summation
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let head = HeadParams::<f64>::init(&mut rng);
        let probs = head.classify(&f.view()).unwrap();
        let oracle = -labels
            .iter()
            .enumerate()
            .map(|(i, &l)| probs[(i, l as usize)].ln())
            .sum::<f64>()
            / 5.0;
        let loss = supervised_loss(&head, &f.view(), &labels).unwrap();
        assert!((loss - oracle).abs() < 1e-12);

        // invalid label
        assert!(supervised_loss(&head, &f.view(), &[0, 1, 2, 3, 10]).is_err());
    }

    #[test]
    fn weights_validate() {
        assert!(LossWeights::<f32>::new(0.001).is_ok());
        assert!(LossWeights::<f32>::new(0.0).is_err());
        assert!(LossWeights::<f32>::new(-1.0).is_err());
        assert!(LossWeights::<f32>::new(f32::NAN).is_err());
        let w = LossWeights::<f64>::default();
        assert_eq!(w.lambda_adv, 1e-3);
    }
}
