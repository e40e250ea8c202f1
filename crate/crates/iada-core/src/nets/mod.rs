//! The four parametric functions: source/target encoders, supervised head,
//! domain discriminator, and feature generator. Each is a flat parameter
//! record plus explicit forward/backward maps.

pub mod bundle;
pub mod discriminator;
pub mod encoder;
pub mod generator;
pub mod head;

pub use bundle::ModelBundle;
pub use discriminator::{DiscriminatorParams, DISC_CLAMP};
pub use encoder::{EncoderParams, FEATURE_DIM};
pub use generator::GeneratorParams;
pub use head::HeadParams;

use crate::error::Result;
use crate::nn::ParamSet;
use crate::scalar::Scalar;
use ndarray::{Array2, Array3, ArrayView3};

/// Trainable feature producer the adversarial step optimizes against the
/// discriminator. The target encoder implements it over images; the
/// generator implements it over noise (shaped `[B × 1 × n]`), so source-GAN
/// training and adaptation share one step routine.
pub trait FeatureEncoder<F: Scalar> {
    type Cache;

    fn feature_dim(&self) -> usize;

    /// Forward map to `[B × F]` features plus whatever the backward pass
    /// needs.
    fn forward(&self, inputs: &ArrayView3<F>) -> Result<(Array2<F>, Self::Cache)>;

    /// Parameter gradients given the loss gradient on the features.
    fn backward(&self, cache: &Self::Cache, d_features: &Array2<F>) -> ParamSet<F>;

    fn params(&self) -> &ParamSet<F>;

    fn params_mut(&mut self) -> &mut ParamSet<F>;

    /// Forward without keeping a cache.
    fn features(&self, inputs: &ArrayView3<F>) -> Result<Array2<F>> {
        Ok(self.forward(inputs)?.0)
    }
}

/// Reshape a `[B × H × W]` image stack into the `[B × 1 × H × W]` layout the
/// convolution ops expect.
pub(crate) fn as_nchw<F: Scalar>(images: &ArrayView3<F>) -> ndarray::Array4<F> {
    let (b, h, w) = images.dim();
    images
        .to_owned()
        .into_shape_with_order((b, 1, h, w))
        .expect("adding a channel axis cannot fail")
}

/// Convenience wrapper: flat `[B × n]` noise as the `[B × 1 × n]` input the
/// [`FeatureEncoder`] trait expects.
pub fn noise_as_inputs<F: Scalar>(noise: Array2<F>) -> Array3<F> {
    let (b, n) = noise.dim();
    noise
        .into_shape_with_order((b, 1, n))
        .expect("adding a row axis cannot fail")
}
