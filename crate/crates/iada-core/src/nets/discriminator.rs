//! Domain discriminator: feature vector → probability of the "real" class
//! (source or generated features, depending on the phase).

use crate::error::{Error, Result};
use crate::nets::encoder::FEATURE_DIM;
use crate::nn::ops::{dense, dense_backward, elu_backward, elu_inplace, sigmoid};
use crate::nn::{Layout, ParamSet};
use crate::scalar::{real, Scalar};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use std::sync::Arc;

/// Outputs are clamped to `[ε, 1−ε]` so the log terms stay finite.
pub const DISC_CLAMP: f64 = 1e-7;

const HIDDEN: usize = 512;

#[derive(Debug, Clone)]
pub struct DiscriminatorParams<F: Scalar> {
    pub params: ParamSet<F>,
}

/// Activations of one discriminator pass.
pub struct DiscCache<F> {
    input: Array2<F>,
    h1: Array2<F>,
    h2: Array2<F>,
    /// Pre-sigmoid activations, `[B]`.
    pub logits: Array1<F>,
    /// Clamped probabilities, `[B]`.
    pub probs: Array1<F>,
}

impl<F: Scalar> DiscriminatorParams<F> {
    pub fn layout() -> Arc<Layout> {
        Layout::new(&[
            ("w1", &[HIDDEN, FEATURE_DIM]),
            ("b1", &[HIDDEN]),
            ("w2", &[HIDDEN, HIDDEN]),
            ("b2", &[HIDDEN]),
            ("w3", &[1, HIDDEN]),
            ("b3", &[1]),
        ])
    }

    pub fn init<R: Rng>(rng: &mut R) -> Self {
        DiscriminatorParams {
            params: ParamSet::fan_in_uniform(Self::layout(), rng),
        }
    }

    pub fn zeros() -> Self {
        DiscriminatorParams {
            params: ParamSet::zeros(Self::layout()),
        }
    }

    fn check_features(&self, features: &ArrayView2<F>) -> Result<()> {
        if features.dim().1 != FEATURE_DIM {
            return Err(Error::invalid(format!(
                "discriminator expects {FEATURE_DIM}-dimensional features, got {}",
                features.dim().1
            )));
        }
        if features.dim().0 == 0 {
            return Err(Error::invalid("empty feature batch"));
        }
        Ok(())
    }

    /// `D(f)` for each row of `features`, in `[ε, 1−ε]`.
    pub fn discriminate(&self, features: &ArrayView2<F>) -> Result<Array1<F>> {
        Ok(self.forward_cached(features)?.probs)
    }

    pub fn forward_cached(&self, features: &ArrayView2<F>) -> Result<DiscCache<F>> {
        self.check_features(features)?;
        let input = features.to_owned();
        let mut h1 = dense(features, &self.params.mat("w1"), &self.params.vec1("b1"));
        elu_inplace(&mut h1);
        let mut h2 = dense(&h1.view(), &self.params.mat("w2"), &self.params.vec1("b2"));
        elu_inplace(&mut h2);
        let out = dense(&h2.view(), &self.params.mat("w3"), &self.params.vec1("b3"));
        let logits = out.index_axis(Axis(1), 0).to_owned();
        let (lo, hi) = (real::<F>(DISC_CLAMP), real::<F>(1.0 - DISC_CLAMP));
        let probs = logits.mapv(|a| sigmoid(a).max(lo).min(hi));
        Ok(DiscCache {
            input,
            h1,
            h2,
            logits,
            probs,
        })
    }

    /// Gradients given the loss gradient on the pre-sigmoid logits; also
    /// returns the gradient on the input features for chaining into the
    /// encoder or generator.
    pub fn backward(&self, cache: &DiscCache<F>, d_logits: &Array1<F>) -> (ParamSet<F>, Array2<F>) {
        let b = cache.input.dim().0;
        let d_out = d_logits
            .view()
            .into_shape_with_order((b, 1))
            .expect("column reshape")
            .to_owned();
        let mut grads = ParamSet::zeros(self.params.layout().clone());
        let (dh2, dw3, db3) = dense_backward(&cache.h2.view(), &self.params.mat("w3"), &d_out.view());
        let dh2 = elu_backward(&cache.h2, &dh2);
        let (dh1, dw2, db2) = dense_backward(&cache.h1.view(), &self.params.mat("w2"), &dh2.view());
        let dh1 = elu_backward(&cache.h1, &dh1);
        let (dx, dw1, db1) =
            dense_backward(&cache.input.view(), &self.params.mat("w1"), &dh1.view());
        grads.mat_mut("w3").assign(&dw3);
        grads.vec1_mut("b3").assign(&db3);
        grads.mat_mut("w2").assign(&dw2);
        grads.vec1_mut("b2").assign(&db2);
        grads.mat_mut("w1").assign(&dw1);
        grads.vec1_mut("b1").assign(&db1);
        (grads, dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_features(seed: u64, b: usize) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((b, FEATURE_DIM), |_| rng.random::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn zero_discriminator_outputs_half() {
        let disc = DiscriminatorParams::<f64>::zeros();
        let f = random_features(1, 4);
        let p = disc.discriminate(&f.view()).unwrap();
        assert!(p.iter().all(|&v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn outputs_stay_inside_clamp_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut disc = DiscriminatorParams::<f32>::init(&mut rng);
        // blow up the final layer so raw sigmoids saturate
        disc.params.mat_mut("w3").fill(50.0);
        disc.params.vec1_mut("b3").fill(500.0);
        let p = disc.discriminate(&random_features(3, 8).mapv(|v| v as f32).view()).unwrap();
        let (lo, hi) = (DISC_CLAMP as f32, 1.0 - DISC_CLAMP as f32);
        assert!(p.iter().all(|&v| v >= lo && v <= hi));
        disc.params.vec1_mut("b3").fill(-500.0);
        let p = disc.discriminate(&random_features(3, 8).mapv(|v| v as f32).view()).unwrap();
        assert!(p.iter().all(|&v| v >= lo && v <= hi));
    }

    #[test]
    fn batch_permutation_permutes_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let disc = DiscriminatorParams::<f64>::init(&mut rng);
        let f = random_features(5, 6);
        let p = disc.discriminate(&f.view()).unwrap();
        let perm = [3usize, 0, 5, 1, 4, 2];
        let mut fp = Array2::zeros((6, FEATURE_DIM));
        for (i, &src) in perm.iter().enumerate() {
            fp.row_mut(i).assign(&f.row(src));
        }
        let pp = disc.discriminate(&fp.view()).unwrap();
        for (i, &src) in perm.iter().enumerate() {
            assert!((pp[i] - p[src]).abs() < 1e-15);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut disc = DiscriminatorParams::<f64>::init(&mut rng);
        let f = random_features(7, 3);
        // scalar loss: 0.5 Σ logits²
        let cache = disc.forward_cached(&f.view()).unwrap();
        let (grads, dx) = disc.backward(&cache, &cache.logits);
        let h = 1e-6;
        let n = disc.params.len();
        for _ in 0..10 {
            let idx = rng.random_range(0..n);
            let orig = disc.params.data()[idx];
            disc.params.data_mut()[idx] = orig + h;
            let lp: f64 = disc
                .forward_cached(&f.view())
                .unwrap()
                .logits
                .iter()
                .map(|v| 0.5 * v * v)
                .sum();
            disc.params.data_mut()[idx] = orig - h;
            let lm: f64 = disc
                .forward_cached(&f.view())
                .unwrap()
                .logits
                .iter()
                .map(|v| 0.5 * v * v)
                .sum();
            disc.params.data_mut()[idx] = orig;
            let numeric = (lp - lm) / (2.0 * h);
            let analytic = grads.data()[idx];
            let denom = numeric.abs().max(analytic.abs()).max(1e-8);
            assert!((numeric - analytic).abs() / denom < 1e-3);
        }
        // input gradient via one probed coordinate
        let mut f2 = f.clone();
        f2[(1, 10)] += h;
        let lp: f64 = disc
            .forward_cached(&f2.view())
            .unwrap()
            .logits
            .iter()
            .map(|v| 0.5 * v * v)
            .sum();
        f2[(1, 10)] -= 2.0 * h;
        let lm: f64 = disc
            .forward_cached(&f2.view())
            .unwrap()
            .logits
            .iter()
            .map(|v| 0.5 * v * v)
            .sum();
        let numeric = (lp - lm) / (2.0 * h);
        assert!((numeric - dx[(1, 10)]).abs() / numeric.abs().max(1e-8) < 1e-3);
    }
}
