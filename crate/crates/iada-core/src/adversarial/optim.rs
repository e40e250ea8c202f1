//! Flat Adam over a parameter vector.

use crate::error::{Error, Result};
use crate::nn::ParamSet;
use crate::scalar::{real, Scalar};

/// Adam hyperparameters. Defaults match the adversarial phases; source
/// training overrides `beta1` to 0.9.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig<F> {
    pub lr: F,
    pub beta1: F,
    pub beta2: F,
    pub eps: F,
}

impl<F: Scalar> AdamConfig<F> {
    pub fn new(lr: f64) -> Self {
        AdamConfig {
            lr: real::<F>(lr),
            beta1: real::<F>(0.5),
            beta2: real::<F>(0.999),
            eps: real::<F>(1e-8),
        }
    }

    pub fn with_beta1(mut self, beta1: f64) -> Self {
        self.beta1 = real::<F>(beta1);
        self
    }
}

/// Adam state for one parameter set, stored flat so every architecture
/// shares the same update path.
#[derive(Debug, Clone)]
pub struct Adam<F> {
    config: AdamConfig<F>,
    m: Vec<F>,
    v: Vec<F>,
    t: u64,
}

impl<F: Scalar> Adam<F> {
    pub fn new(config: AdamConfig<F>, param_len: usize) -> Self {
        Adam {
            config,
            m: vec![F::zero(); param_len],
            v: vec![F::zero(); param_len],
            t: 0,
        }
    }

    pub fn config(&self) -> &AdamConfig<F> {
        &self.config
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// One bias-corrected update in place.
    pub fn step(&mut self, params: &mut ParamSet<F>, grads: &ParamSet<F>) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::invalid(format!(
                "optimizer sized for {} parameters, got {} params / {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let t = real::<F>(self.t as f64);
        let correction1 = F::one() - beta1.powf(t);
        let correction2 = F::one() - beta2.powf(t);
        let data = params.data_mut();
        for i in 0..data.len() {
            let g = grads.data()[i];
            self.m[i] = beta1 * self.m[i] + (F::one() - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (F::one() - beta2) * g * g;
            let m_hat = self.m[i] / correction1;
            let v_hat = self.v[i] / correction2;
            data[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Layout;

    fn scalar_set(value: f64) -> ParamSet<f64> {
        let layout = Layout::new(&[("x", &[1])]);
        let mut p = ParamSet::zeros(layout);
        p.data_mut()[0] = value;
        p
    }

    #[test]
    fn first_step_moves_by_lr() {
        // With bias correction, the first Adam step is lr·sign(g) up to eps.
        let mut p = scalar_set(1.0);
        let mut g = scalar_set(0.0);
        g.data_mut()[0] = 4.2;
        let mut opt = Adam::new(AdamConfig::new(0.05), 1);
        opt.step(&mut p, &g).unwrap();
        assert!((p.data()[0] - (1.0 - 0.05)).abs() < 1e-7, "{}", p.data()[0]);
    }

    #[test]
    fn matches_hand_computed_trajectory() {
        // Three steps on constant gradient 1.0 with lr 0.1, β1 0.5, β2 0.999.
        let cfg = AdamConfig::<f64>::new(0.1);
        let mut opt = Adam::new(cfg, 1);
        let mut p = scalar_set(0.0);
        let mut g = scalar_set(0.0);
        g.data_mut()[0] = 1.0;

        let (mut m, mut v, mut x) = (0.0f64, 0.0f64, 0.0f64);
        for t in 1..=3 {
            m = 0.5 * m + 0.5;
            v = 0.999 * v + 0.001;
            let m_hat = m / (1.0 - 0.5f64.powi(t));
            let v_hat = v / (1.0 - 0.999f64.powi(t));
            x -= 0.1 * m_hat / (v_hat.sqrt() + 1e-8);
            opt.step(&mut p, &g).unwrap();
            assert!((p.data()[0] - x).abs() < 1e-14, "step {t}");
        }
    }

    #[test]
    fn converges_on_quadratic() {
        // minimize (x − 3)² from x = −2
        let mut p = scalar_set(-2.0);
        let mut opt = Adam::new(AdamConfig::new(0.1), 1);
        for _ in 0..600 {
            let mut g = scalar_set(0.0);
            g.data_mut()[0] = 2.0 * (p.data()[0] - 3.0);
            opt.step(&mut p, &g).unwrap();
        }
        assert!((p.data()[0] - 3.0).abs() < 1e-3, "{}", p.data()[0]);
    }

    #[test]
    fn deterministic_across_replays() {
        let run = || {
            let mut p = scalar_set(0.7);
            let mut opt = Adam::new(AdamConfig::new(0.02).with_beta1(0.9), 1);
            for k in 0..50 {
                let mut g = scalar_set(0.0);
                g.data_mut()[0] = (k as f64 * 0.3).sin() + p.data()[0];
                opt.step(&mut p, &g).unwrap();
            }
            p.data()[0].to_bits()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let layout = Layout::new(&[("x", &[3])]);
        let mut p = ParamSet::<f64>::zeros(layout);
        let g = scalar_set(1.0);
        let mut opt = Adam::new(AdamConfig::new(0.1), 3);
        assert!(opt.step(&mut p, &g).is_err());
    }
}
