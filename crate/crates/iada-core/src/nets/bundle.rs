//! All model components of one run under a single roof.

use crate::error::Result;
use crate::nets::{DiscriminatorParams, EncoderParams, GeneratorParams, HeadParams};
use crate::nn::ParamSet;
use crate::runtime::checkpoint::{self, CheckpointManifest};
use crate::runtime::seed::SeedSplitter;
use crate::scalar::Scalar;
use std::path::Path;

/// Source/target encoders, supervised head, discriminator, and (in SDM
/// runs) the feature generator.
#[derive(Debug, Clone)]
pub struct ModelBundle<F: Scalar> {
    pub source_encoder: EncoderParams<F>,
    pub target_encoder: EncoderParams<F>,
    pub head: HeadParams<F>,
    pub discriminator: DiscriminatorParams<F>,
    pub generator: Option<GeneratorParams<F>>,
}

impl<F: Scalar> ModelBundle<F> {
    /// Fresh bundle with per-component init streams derived from `root_seed`
    /// (the target encoder starts as a copy of the source encoder).
    pub fn init(root_seed: u64, with_generator: Option<usize>) -> Self {
        let splitter = SeedSplitter::new(root_seed);
        let source_encoder = EncoderParams::init(&mut splitter.rng("init-encoder", 0));
        let target_encoder = source_encoder.clone();
        ModelBundle {
            source_encoder,
            target_encoder,
            head: HeadParams::init(&mut splitter.rng("init-head", 0)),
            discriminator: DiscriminatorParams::init(&mut splitter.rng("init-disc", 0)),
            generator: with_generator
                .map(|noise_dim| GeneratorParams::init(noise_dim, &mut splitter.rng("init-gen", 0))),
        }
    }

    /// Re-copy the source encoder into the target encoder (warm start for
    /// the first adaptation).
    pub fn clone_source_into_target(&mut self) {
        self.target_encoder = self.source_encoder.clone();
    }

    /// Bitwise hashes of the frozen components, for the freeze contract.
    pub fn frozen_hashes(&self) -> (u64, u64) {
        (
            self.source_encoder.params.hash64(),
            self.head.params.hash64(),
        )
    }

    fn component_names(&self) -> Vec<&'static str> {
        let mut names = vec!["source_encoder", "target_encoder", "head", "discriminator"];
        if self.generator.is_some() {
            names.push("generator");
        }
        names
    }

    /// Save every component under `path` with a stage tag.
    pub fn save(&self, path: &Path, stage: &str, seed: u64) -> Result<()> {
        let mut components: Vec<(&str, &ParamSet<F>)> = vec![
            ("source_encoder", &self.source_encoder.params),
            ("target_encoder", &self.target_encoder.params),
            ("head", &self.head.params),
            ("discriminator", &self.discriminator.params),
        ];
        if let Some(gen) = &self.generator {
            components.push(("generator", &gen.params));
        }
        checkpoint::save_checkpoint(path, stage, seed, &components)
    }

    /// Load a checkpoint into this bundle (shapes must match; presence of
    /// the generator must match the file).
    pub fn load(&mut self, path: &Path) -> Result<CheckpointManifest> {
        let names = self.component_names();
        let mut components: Vec<(&str, &mut ParamSet<F>)> = Vec::new();
        let mut slots: Vec<&mut ParamSet<F>> = vec![
            &mut self.source_encoder.params,
            &mut self.target_encoder.params,
            &mut self.head.params,
            &mut self.discriminator.params,
        ];
        if let Some(gen) = &mut self.generator {
            slots.push(&mut gen.params);
        }
        for (name, slot) in names.into_iter().zip(slots) {
            components.push((name, slot));
        }
        checkpoint::load_checkpoint_into(path, &mut components)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::IMAGE_SIDE;
    use ndarray::Array3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn warm_start_equality_after_clone() {
        let mut bundle = ModelBundle::<f32>::init(3, None);
        // drift the target encoder, then re-clone
        bundle.target_encoder.params.data_mut()[0] += 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let images = Array3::from_shape_fn((2, IMAGE_SIDE, IMAGE_SIDE), |_| rng.random::<f32>());
        let fs = bundle.source_encoder.encode(&images.view()).unwrap();
        let ft = bundle.target_encoder.encode(&images.view()).unwrap();
        assert_ne!(fs, ft);
        bundle.clone_source_into_target();
        let ft = bundle.target_encoder.encode(&images.view()).unwrap();
        assert_eq!(fs, ft);
        assert_eq!(
            bundle.source_encoder.params.hash64(),
            bundle.target_encoder.params.hash64()
        );
    }

    #[test]
    fn clone_is_independent() {
        let bundle = ModelBundle::<f32>::init(1, None);
        let mut copy = bundle.source_encoder.clone();
        copy.params.data_mut()[0] += 1.0;
        assert_ne!(
            copy.params.data()[0],
            bundle.source_encoder.params.data()[0]
        );
    }

    #[test]
    fn bundle_checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bundle.ckpt");
        let bundle = ModelBundle::<f32>::init(9, Some(64));
        bundle.save(&path, "source-gan", 9).unwrap();
        let mut other = ModelBundle::<f32>::init(100, Some(64));
        let manifest = other.load(&path).unwrap();
        assert_eq!(manifest.stage, "source-gan");
        assert_eq!(
            other.discriminator.params.hash64(),
            bundle.discriminator.params.hash64()
        );
        assert_eq!(
            other.generator.as_ref().unwrap().params.hash64(),
            bundle.generator.as_ref().unwrap().params.hash64()
        );
        // generator presence must match the file
        let mut plain = ModelBundle::<f32>::init(100, None);
        assert!(plain.load(&path).is_err());
    }

    #[test]
    fn init_is_seed_deterministic_and_seed_sensitive() {
        let a = ModelBundle::<f32>::init(4, Some(64));
        let b = ModelBundle::<f32>::init(4, Some(64));
        let c = ModelBundle::<f32>::init(5, Some(64));
        assert_eq!(
            a.discriminator.params.hash64(),
            b.discriminator.params.hash64()
        );
        assert_ne!(
            a.discriminator.params.hash64(),
            c.discriminator.params.hash64()
        );
        // different components draw from different streams
        assert_ne!(a.head.params.data()[0], a.discriminator.params.data()[0]);
    }
}
