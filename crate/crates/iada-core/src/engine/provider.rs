//! Where the discriminator's "real" class comes from: encoded source images,
//! or generated features when the run models the source distribution instead
//! of retaining it.

use crate::data::Pool;
use crate::error::{Error, Result};
use crate::nets::{EncoderParams, GeneratorParams};
use crate::runtime::AccessAudit;
use crate::scalar::Scalar;
use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

/// Per-step supplier of the "real"-class feature batch. The source-backed
/// variant reads (and audits) the retained source pool through the frozen
/// source encoder; the generated variant never touches any dataset.
pub enum RealFeatures<'a, F: Scalar> {
    Source {
        encoder: &'a EncoderParams<F>,
        pool: &'a Pool<F>,
        stream: crate::data::IndexStream,
        audit: &'a AccessAudit,
        phase: String,
    },
    Generated {
        generator: &'a GeneratorParams<F>,
        rng: ChaCha8Rng,
    },
}

impl<'a, F: Scalar> RealFeatures<'a, F> {
    pub fn source(
        encoder: &'a EncoderParams<F>,
        pool: &'a Pool<F>,
        audit: &'a AccessAudit,
        phase: impl Into<String>,
        stream_seed: u64,
    ) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::Resource("source pool is empty".into()));
        }
        Ok(RealFeatures::Source {
            encoder,
            pool,
            stream: crate::data::IndexStream::new(pool.len(), stream_seed),
            audit,
            phase: phase.into(),
        })
    }

    pub fn generated(generator: &'a GeneratorParams<F>, rng: ChaCha8Rng) -> Self {
        RealFeatures::Generated { generator, rng }
    }

    pub fn is_generated(&self) -> bool {
        matches!(self, RealFeatures::Generated { .. })
    }

    /// Next `[batch × F]` real-class feature matrix.
    pub fn next(&mut self, batch: usize) -> Result<Array2<F>> {
        match self {
            RealFeatures::Source {
                encoder,
                pool,
                stream,
                audit,
                phase,
            } => {
                let indices = stream.next_chunk(batch);
                audit.record(phase, batch as u64);
                let images = pool.batch(&indices).images;
                encoder.encode(&images.view())
            }
            RealFeatures::Generated { generator, rng } => {
                let noise = generator.sample_noise(batch, rng);
                generator.generate(&noise.view())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::IMAGE_SIDE;
    use crate::nets::FEATURE_DIM;
    use ndarray::Array3;
    use rand::SeedableRng;

    fn tiny_pool(n: usize) -> Pool<f32> {
        let images = Array3::from_shape_fn((n, IMAGE_SIDE, IMAGE_SIDE), |(i, r, c)| {
            ((i + r + c) % 7) as f32 / 7.0
        });
        Pool::new(images, (0..n).map(|i| (i % 10) as u8).collect()).unwrap()
    }

    #[test]
    fn source_variant_counts_every_read() {
        let pool = tiny_pool(12);
        let encoder = EncoderParams::<f32>::zeros();
        let audit = AccessAudit::new();
        let mut provider =
            RealFeatures::source(&encoder, &pool, &audit, "adapt/0", 5).unwrap();
        for _ in 0..3 {
            let f = provider.next(4).unwrap();
            assert_eq!(f.dim(), (4, FEATURE_DIM));
        }
        assert_eq!(audit.count("adapt/0"), 12);
        assert_eq!(audit.total(), 12);
    }

    #[test]
    fn generated_variant_reads_nothing_and_replays() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let generator = GeneratorParams::<f32>::init(16, &mut rng);
        let audit = AccessAudit::new();
        let draw = || {
            let mut provider = RealFeatures::generated(
                &generator,
                ChaCha8Rng::seed_from_u64(11),
            );
            provider.next(5).unwrap()
        };
        let (a, b) = (draw(), draw());
        assert_eq!(a, b, "same noise seed must replay identically");
        assert_eq!(audit.total(), 0);
        assert!(RealFeatures::generated(&generator, rng).is_generated());
    }

    #[test]
    fn source_variant_is_stream_seed_deterministic() {
        let pool = tiny_pool(10);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let encoder = EncoderParams::<f32>::init(&mut rng);
        let audit = AccessAudit::new();
        let draw = |seed: u64| {
            let mut provider =
                RealFeatures::source(&encoder, &pool, &audit, "p", seed).unwrap();
            provider.next(6).unwrap()
        };
        assert_eq!(draw(4), draw(4));
    }
}
