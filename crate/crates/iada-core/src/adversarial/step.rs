//! The alternating minimax update: one discriminator step, then one step of
//! whichever feature producer is being trained against it.

use crate::adversarial::losses::{bce_grads_on_disc, confusion_grads_on_features, LossWeights};
use crate::adversarial::optim::Adam;
use crate::error::{Error, Result, StepTelemetry};
use crate::nets::{DiscriminatorParams, FeatureEncoder};
use crate::scalar::Scalar;
use ndarray::{ArrayView2, ArrayView3};

/// What one alternation produced, in discriminator units: `loss_d` is the
/// binary cross-entropy, `loss_e_or_g` the unweighted confusion loss of the
/// trainee, and the means are the discriminator outputs measured during the
/// discriminator update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport<F> {
    pub step_index: u64,
    pub loss_d: F,
    pub loss_e_or_g: F,
    pub mean_d_on_real: F,
    pub mean_d_on_fake: F,
}

impl<F: Scalar> StepReport<F> {
    fn validated(self, phase: &str) -> Result<Self> {
        let fields = [
            self.loss_d,
            self.loss_e_or_g,
            self.mean_d_on_real,
            self.mean_d_on_fake,
        ];
        if fields.iter().all(|v| v.is_finite()) {
            Ok(self)
        } else {
            Err(Error::Numerical {
                message: "non-finite step report".into(),
                telemetry: self.telemetry(phase),
            })
        }
    }

    /// Telemetry snapshot for error reporting and metrics rows.
    pub fn telemetry(&self, phase: &str) -> StepTelemetry {
        StepTelemetry {
            phase: phase.to_string(),
            step: self.step_index,
            loss_d: self.loss_d.to_f64().unwrap_or(f64::NAN),
            loss_e_or_g: self.loss_e_or_g.to_f64().unwrap_or(f64::NAN),
            d_real_mean: self.mean_d_on_real.to_f64().unwrap_or(f64::NAN),
            d_fake_mean: self.mean_d_on_fake.to_f64().unwrap_or(f64::NAN),
        }
    }
}

/// One discriminator update on balanced real/fake feature batches. Returns
/// `(loss, mean D(real), mean D(fake))`; only the discriminator moves.
pub fn discriminator_step<F: Scalar>(
    disc: &mut DiscriminatorParams<F>,
    opt: &mut Adam<F>,
    f_real: &ArrayView2<F>,
    f_fake: &ArrayView2<F>,
) -> Result<(F, F, F)> {
    let (loss, mean_real, mean_fake, grads) =
        bce_grads_on_disc(disc, f_real, f_fake, "discriminator step")?;
    opt.step(&mut disc.params, &grads)?;
    Ok((loss, mean_real, mean_fake))
}

/// One trainee update against a fixed discriminator. The confusion gradient
/// on the features is scaled by `lambda_adv` before flowing into the trainee;
/// the returned `(loss, mean D(fake))` stay unweighted so reports are
/// comparable across weightings.
pub fn trainee_step<F: Scalar, T: FeatureEncoder<F>>(
    disc: &DiscriminatorParams<F>,
    trainee: &mut T,
    opt: &mut Adam<F>,
    inputs: &ArrayView3<F>,
    weights: &LossWeights<F>,
) -> Result<(F, F)> {
    let (features, cache) = trainee.forward(inputs)?;
    let (loss, mean_d, mut d_features) =
        confusion_grads_on_features(disc, &features.view(), "trainee step")?;
    d_features.mapv_inplace(|v| v * weights.lambda_adv);
    let grads = trainee.backward(&cache, &d_features);
    opt.step(trainee.params_mut(), &grads)?;
    Ok((loss, mean_d))
}

/// One full alternation: discriminator first, trainee second against the
/// already-updated discriminator. `f_real` is whatever plays the "real" role
/// in the current phase (frozen source features, or generated features);
/// `inputs` feed the trainee. Batches must be balanced.
#[allow(clippy::too_many_arguments)]
pub fn adversarial_step<F: Scalar, T: FeatureEncoder<F>>(
    disc: &mut DiscriminatorParams<F>,
    disc_opt: &mut Adam<F>,
    trainee: &mut T,
    trainee_opt: &mut Adam<F>,
    f_real: &ArrayView2<F>,
    inputs: &ArrayView3<F>,
    weights: &LossWeights<F>,
    step_index: u64,
) -> Result<StepReport<F>> {
    let f_fake = trainee.features(inputs)?;
    let (loss_d, mean_real, mean_fake) =
        discriminator_step(disc, disc_opt, f_real, &f_fake.view())?;
    let (loss_t, _) = trainee_step(disc, trainee, trainee_opt, inputs, weights)?;
    StepReport {
        step_index,
        loss_d,
        loss_e_or_g: loss_t,
        mean_d_on_real: mean_real,
        mean_d_on_fake: mean_fake,
    }
    .validated("adversarial")
}
