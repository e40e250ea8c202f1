//! Convolutional feature encoder.
//!
//! Three stride-2 conv blocks (32 → 64 → 128 channels, 3×3 kernels,
//! exponential-linear activations) take a 28×28 image down to 4×4, and
//! global average pooling flattens it to a 128-dimensional feature vector.
//! Source and target encoders are two instances of this one shape, so
//! warm-starting is a plain parameter copy.

use crate::data::IMAGE_SIDE;
use crate::error::{Error, Result};
use crate::nets::{as_nchw, FeatureEncoder};
use crate::nn::ops::{
    conv2d_backward, conv2d_forward, elu_backward, elu_inplace, global_avg_pool,
    global_avg_pool_backward, ConvGeom,
};
use crate::nn::{Layout, ParamSet};
use crate::scalar::Scalar;
use ndarray::{Array2, Array4, ArrayView3};
use rand::Rng;
use std::sync::Arc;

/// Feature dimension `F` shared by the discriminator and generator.
pub const FEATURE_DIM: usize = 128;

const CHANNELS: [usize; 3] = [32, 64, 128];
const KERNEL: usize = 3;
const STRIDE: usize = 2;
const PAD: usize = 1;

#[derive(Debug, Clone)]
pub struct EncoderParams<F: Scalar> {
    pub params: ParamSet<F>,
}

/// Intermediate activations of one encoder forward pass.
pub struct EncoderCache<F> {
    geoms: [ConvGeom; 3],
    cols: [Array2<F>; 3],
    /// Post-activation outputs of each block.
    acts: [Array4<F>; 3],
}

impl<F: Scalar> EncoderParams<F> {
    pub fn layout() -> Arc<Layout> {
        Layout::new(&[
            ("conv1.w", &[CHANNELS[0], 1, KERNEL, KERNEL]),
            ("conv1.b", &[CHANNELS[0]]),
            ("conv2.w", &[CHANNELS[1], CHANNELS[0], KERNEL, KERNEL]),
            ("conv2.b", &[CHANNELS[1]]),
            ("conv3.w", &[CHANNELS[2], CHANNELS[1], KERNEL, KERNEL]),
            ("conv3.b", &[CHANNELS[2]]),
        ])
    }

    pub fn init<R: Rng>(rng: &mut R) -> Self {
        EncoderParams {
            params: ParamSet::fan_in_uniform(Self::layout(), rng),
        }
    }

    pub fn zeros() -> Self {
        EncoderParams {
            params: ParamSet::zeros(Self::layout()),
        }
    }

    fn check_input(&self, images: &ArrayView3<F>) -> Result<()> {
        let (b, h, w) = images.dim();
        if b == 0 {
            return Err(Error::invalid("empty image batch"));
        }
        if h != IMAGE_SIDE || w != IMAGE_SIDE {
            return Err(Error::invalid(format!(
                "encoder expects {IMAGE_SIDE}×{IMAGE_SIDE} images, got {h}×{w}"
            )));
        }
        Ok(())
    }

    /// `[B × H × W]` images to `[B × {FEATURE_DIM}]` features.
    pub fn encode(&self, images: &ArrayView3<F>) -> Result<Array2<F>> {
        Ok(self.forward_cached(images)?.0)
    }

    pub fn forward_cached(
        &self,
        images: &ArrayView3<F>,
    ) -> Result<(Array2<F>, EncoderCache<F>)> {
        self.check_input(images)?;
        let b = images.dim().0;
        let mut x = as_nchw(images);
        let mut geoms = Vec::with_capacity(3);
        let mut cols = Vec::with_capacity(3);
        let mut acts = Vec::with_capacity(3);
        let mut in_ch = 1;
        let mut side = IMAGE_SIDE;
        for (i, &out_ch) in CHANNELS.iter().enumerate() {
            let geom = ConvGeom::new(b, in_ch, side, side, out_ch, KERNEL, STRIDE, PAD);
            let name = ["conv1", "conv2", "conv3"][i];
            let w = self.params.mat_flat(&format!("{name}.w"), out_ch);
            let bias = self.params.vec1(&format!("{name}.b"));
            let (mut y, col) = conv2d_forward(&x, &w, &bias, &geom);
            elu_inplace(&mut y);
            geoms.push(geom);
            cols.push(col);
            x = y.clone();
            acts.push(y);
            in_ch = out_ch;
            side = geom.out_h;
        }
        let features = global_avg_pool(&x);
        let cache = EncoderCache {
            geoms: [geoms[0], geoms[1], geoms[2]],
            cols: cols.try_into().map_err(|_| ()).expect("three blocks"),
            acts: acts.try_into().map_err(|_| ()).expect("three blocks"),
        };
        Ok((features, cache))
    }

    /// Gradients of a scalar loss w.r.t. all encoder parameters, given the
    /// loss gradient on the pooled features.
    pub fn backward_cached(
        &self,
        cache: &EncoderCache<F>,
        d_features: &Array2<F>,
    ) -> ParamSet<F> {
        let mut grads = ParamSet::zeros(self.params.layout().clone());
        let last = &cache.geoms[2];
        let mut d_act = global_avg_pool_backward(&d_features.view(), last.out_h, last.out_w);
        for i in (0..3).rev() {
            let geom = &cache.geoms[i];
            let name = ["conv1", "conv2", "conv3"][i];
            let d_pre = elu_backward(&cache.acts[i], &d_act);
            let w = self.params.mat_flat(&format!("{name}.w"), geom.out_ch);
            let (dx, dw, db) = conv2d_backward(&d_pre, &cache.cols[i], &w, geom, i > 0);
            grads
                .mat_flat_mut(&format!("{name}.w"), geom.out_ch)
                .assign(&dw);
            grads.vec1_mut(&format!("{name}.b")).assign(&db);
            if let Some(dx) = dx {
                d_act = dx;
            }
        }
        grads
    }
}

impl<F: Scalar> FeatureEncoder<F> for EncoderParams<F> {
    type Cache = EncoderCache<F>;

    fn feature_dim(&self) -> usize {
        FEATURE_DIM
    }

    fn forward(&self, inputs: &ArrayView3<F>) -> Result<(Array2<F>, Self::Cache)> {
        self.forward_cached(inputs)
    }

    fn backward(&self, cache: &Self::Cache, d_features: &Array2<F>) -> ParamSet<F> {
        self.backward_cached(cache, d_features)
    }

    fn params(&self) -> &ParamSet<F> {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet<F> {
        &mut self.params
    }
}
