//! Feature generator for source distribution modelling: standard-normal
//! noise in, encoder-feature look-alikes out.

use crate::error::{Error, Result};
use crate::nets::encoder::FEATURE_DIM;
use crate::nets::FeatureEncoder;
use crate::nn::ops::{dense, dense_backward, elu_backward, elu_inplace};
use crate::nn::{Layout, ParamSet};
use crate::scalar::{real, Scalar};
use ndarray::{Array2, ArrayView2, ArrayView3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::sync::Arc;

const HIDDEN: usize = 256;

#[derive(Debug, Clone)]
pub struct GeneratorParams<F: Scalar> {
    pub params: ParamSet<F>,
    pub noise_dim: usize,
}

pub struct GenCache<F> {
    noise: Array2<F>,
    h1: Array2<F>,
    h2: Array2<F>,
}

impl<F: Scalar> GeneratorParams<F> {
    pub fn layout(noise_dim: usize) -> Arc<Layout> {
        Layout::new(&[
            ("w1", &[HIDDEN, noise_dim]),
            ("b1", &[HIDDEN]),
            ("w2", &[HIDDEN, HIDDEN]),
            ("b2", &[HIDDEN]),
            ("w3", &[FEATURE_DIM, HIDDEN]),
            ("b3", &[FEATURE_DIM]),
        ])
    }

    pub fn init<R: Rng>(noise_dim: usize, rng: &mut R) -> Self {
        GeneratorParams {
            params: ParamSet::fan_in_uniform(Self::layout(noise_dim), rng),
            noise_dim,
        }
    }

    pub fn zeros(noise_dim: usize) -> Self {
        GeneratorParams {
            params: ParamSet::zeros(Self::layout(noise_dim)),
            noise_dim,
        }
    }

    /// `[B × n]` standard-normal noise (μ = 0, σ = 1).
    pub fn sample_noise<R: Rng>(&self, batch: usize, rng: &mut R) -> Array2<F> {
        Array2::from_shape_fn((batch, self.noise_dim), |_| {
            real::<F>(StandardNormal.sample(rng))
        })
    }

    fn check_noise(&self, noise: &ArrayView2<F>) -> Result<()> {
        if noise.dim().1 != self.noise_dim {
            return Err(Error::invalid(format!(
                "generator expects {}-dimensional noise, got {}",
                self.noise_dim,
                noise.dim().1
            )));
        }
        if noise.dim().0 == 0 {
            return Err(Error::invalid("empty noise batch"));
        }
        Ok(())
    }

    /// `G(z)`: `[B × n]` noise to `[B × F]` features.
    pub fn generate(&self, noise: &ArrayView2<F>) -> Result<Array2<F>> {
        Ok(self.generate_cached(noise)?.0)
    }

    pub fn generate_cached(&self, noise: &ArrayView2<F>) -> Result<(Array2<F>, GenCache<F>)> {
        self.check_noise(noise)?;
        let mut h1 = dense(noise, &self.params.mat("w1"), &self.params.vec1("b1"));
        elu_inplace(&mut h1);
        let mut h2 = dense(&h1.view(), &self.params.mat("w2"), &self.params.vec1("b2"));
        elu_inplace(&mut h2);
        let out = dense(&h2.view(), &self.params.mat("w3"), &self.params.vec1("b3"));
        Ok((
            out,
            GenCache {
                noise: noise.to_owned(),
                h1,
                h2,
            },
        ))
    }

    pub fn backward_cached(&self, cache: &GenCache<F>, d_features: &Array2<F>) -> ParamSet<F> {
        let mut grads = ParamSet::zeros(self.params.layout().clone());
        let (dh2, dw3, db3) =
            dense_backward(&cache.h2.view(), &self.params.mat("w3"), &d_features.view());
        let dh2 = elu_backward(&cache.h2, &dh2);
        let (dh1, dw2, db2) = dense_backward(&cache.h1.view(), &self.params.mat("w2"), &dh2.view());
        let dh1 = elu_backward(&cache.h1, &dh1);
        let (_, dw1, db1) =
            dense_backward(&cache.noise.view(), &self.params.mat("w1"), &dh1.view());
        grads.mat_mut("w3").assign(&dw3);
        grads.vec1_mut("b3").assign(&db3);
        grads.mat_mut("w2").assign(&dw2);
        grads.vec1_mut("b2").assign(&db2);
        grads.mat_mut("w1").assign(&dw1);
        grads.vec1_mut("b1").assign(&db1);
        grads
    }
}

/// Lets the generator stand where an encoder is expected: inputs are noise
/// batches shaped `[B × 1 × n]`.
impl<F: Scalar> FeatureEncoder<F> for GeneratorParams<F> {
    type Cache = GenCache<F>;

    fn feature_dim(&self) -> usize {
        FEATURE_DIM
    }

    fn forward(&self, inputs: &ArrayView3<F>) -> Result<(Array2<F>, Self::Cache)> {
        let (b, rows, n) = inputs.dim();
        if rows != 1 {
            return Err(Error::invalid("noise inputs must be shaped [B × 1 × n]"));
        }
        let noise: Array2<F> = inputs
            .to_owned()
            .into_shape_with_order((b, n))
            .expect("dropping a unit axis cannot fail");
        self.generate_cached(&noise.view())
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

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_generator_zero_noise_gives_zero_features() {
        let gen = GeneratorParams::<f64>::zeros(64);
        let noise = Array2::zeros((3, 64));
        let f = gen.generate(&noise.view()).unwrap();
        assert_eq!(f.dim(), (3, FEATURE_DIM));
        assert!(f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn output_shape_tracks_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let gen = GeneratorParams::<f32>::init(64, &mut rng);
        let noise = gen.sample_noise(16, &mut rng);
        let f = gen.generate(&noise.view()).unwrap();
        assert_eq!(f.dim(), (16, FEATURE_DIM));
        assert!(f.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn seeded_noise_replays_identically() {
        let mut init_rng = ChaCha8Rng::seed_from_u64(2);
        let gen = GeneratorParams::<f32>::init(32, &mut init_rng);
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            let z = gen.sample_noise(4, &mut rng);
            gen.generate(&z.view()).unwrap()
        };
        let (a, b) = (draw(), draw());
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn noise_moments_are_standard_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gen = GeneratorParams::<f64>::zeros(64);
        let z = gen.sample_noise(2000, &mut rng);
        let mean = z.mean().unwrap();
        let var = z.mapv(|v| (v - mean) * (v - mean)).mean().unwrap();
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let gen = GeneratorParams::<f32>::zeros(64);
        let noise = Array2::<f32>::zeros((2, 63));
        assert!(matches!(
            gen.generate(&noise.view()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut gen = GeneratorParams::<f64>::init(16, &mut rng);
        let z = gen.sample_noise(3, &mut rng);
        let (f, cache) = gen.generate_cached(&z.view()).unwrap();
        let grads = gen.backward_cached(&cache, &f);
        let h = 1e-6;
        let n = gen.params.len();
        for _ in 0..10 {
            let idx = rng.random_range(0..n);
            let orig = gen.params.data()[idx];
            gen.params.data_mut()[idx] = orig + h;
            let lp: f64 = gen.generate(&z.view()).unwrap().iter().map(|v| 0.5 * v * v).sum();
            gen.params.data_mut()[idx] = orig - h;
            let lm: f64 = gen.generate(&z.view()).unwrap().iter().map(|v| 0.5 * v * v).sum();
            gen.params.data_mut()[idx] = orig;
            let numeric = (lp - lm) / (2.0 * h);
            let analytic = grads.data()[idx];
            let denom = numeric.abs().max(analytic.abs()).max(1e-8);
            assert!((numeric - analytic).abs() / denom < 1e-3);
        }
    }

    #[test]
    fn unit_row_axis_round_trips_through_trait() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let gen = GeneratorParams::<f32>::init(8, &mut rng);
        let z = gen.sample_noise(5, &mut rng);
        let direct = gen.generate(&z.view()).unwrap();
        let inputs: Array3<f32> = crate::nets::noise_as_inputs(z);
        let via_trait = gen.features(&inputs.view()).unwrap();
        assert_eq!(direct, via_trait);
    }
}
