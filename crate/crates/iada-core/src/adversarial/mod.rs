//! Adversarial objectives and the alternating optimization step.
//!
//! Six losses drive the three training phases:
//!
//! * adaptation — target-encoder confusion loss vs. the source/target
//!   discriminator loss;
//! * source-GAN — generator confusion loss vs. the source/generated
//!   discriminator loss;
//! * SDM adaptation — the same two adaptation forms with generated features
//!   standing in as the "real" class.
//!
//! All encoder/generator objectives use the confusion (inverted-label) form
//! −E[log D(·)], not gradient reversal, and are scaled by `lambda_adv`; the
//! discriminator objective is plain binary cross-entropy, unscaled.

pub mod losses;
pub mod optim;
pub mod step;

pub use losses::{
    bce_grads_on_disc, confusion_grads_on_features, loss_discriminator_features,
    loss_discriminator_gan, loss_discriminator_sdm, loss_generator, loss_target_encoder,
    loss_target_encoder_sdm, supervised_loss, supervised_loss_grads, LossWeights,
};
pub use optim::{Adam, AdamConfig};
pub use step::{adversarial_step, discriminator_step, trainee_step, StepReport};
