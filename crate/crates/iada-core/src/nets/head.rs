//! Supervised head: one affine layer with softmax output.

use crate::data::NUM_CLASSES;
use crate::error::{Error, Result};
use crate::nets::encoder::FEATURE_DIM;
use crate::nn::ops::{dense, dense_backward, softmax_rows};
use crate::nn::{Layout, ParamSet};
use crate::scalar::Scalar;
use ndarray::{Array2, ArrayView2};
use rand::Rng;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct HeadParams<F: Scalar> {
    pub params: ParamSet<F>,
}

impl<F: Scalar> HeadParams<F> {
    pub fn layout() -> Arc<Layout> {
        Layout::new(&[("w", &[NUM_CLASSES, FEATURE_DIM]), ("b", &[NUM_CLASSES])])
    }

    pub fn init<R: Rng>(rng: &mut R) -> Self {
        HeadParams {
            params: ParamSet::fan_in_uniform(Self::layout(), rng),
        }
    }

    pub fn zeros() -> Self {
        HeadParams {
            params: ParamSet::zeros(Self::layout()),
        }
    }

    fn check_features(&self, features: &ArrayView2<F>) -> Result<()> {
        if features.dim().1 != FEATURE_DIM {
            return Err(Error::invalid(format!(
                "head expects {FEATURE_DIM}-dimensional features, got {}",
                features.dim().1
            )));
        }
        Ok(())
    }

    pub fn logits(&self, features: &ArrayView2<F>) -> Result<Array2<F>> {
        self.check_features(features)?;
        Ok(dense(features, &self.params.mat("w"), &self.params.vec1("b")))
    }

    /// Per-sample class probabilities, rows summing to 1.
    pub fn classify(&self, features: &ArrayView2<F>) -> Result<Array2<F>> {
        Ok(softmax_rows(&self.logits(features)?.view()))
    }

    /// Gradients given the loss gradient on the logits; also returns the
    /// gradient on the input features for the encoder chain.
    pub fn backward(
        &self,
        features: &ArrayView2<F>,
        d_logits: &ArrayView2<F>,
    ) -> (ParamSet<F>, Array2<F>) {
        let (dx, dw, db) = dense_backward(features, &self.params.mat("w"), d_logits);
        let mut grads = ParamSet::zeros(self.params.layout().clone());
        grads.mat_mut("w").assign(&dw);
        grads.vec1_mut("b").assign(&db);
        (grads, dx)
    }
}
