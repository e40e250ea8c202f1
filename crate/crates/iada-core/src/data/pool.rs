//! In-memory sample pools and realized (deformed) domains.

use crate::data::batch::{LabeledBatch, UnlabeledBatch, NUM_CLASSES};
use crate::data::deform::deform_batch;
use crate::data::idx::{read_idx_images, read_idx_labels, Split};
use crate::data::sequence::DomainSpec;
use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};
use ndarray::{Array3, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// A labeled dataset held in memory, pixels already scaled to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Pool<F> {
    /// `[N × H × W]`
    pub images: Array3<F>,
    pub labels: Vec<u8>,
}

impl<F: Scalar> Pool<F> {
    pub fn new(images: Array3<F>, labels: Vec<u8>) -> Result<Pool<F>> {
        if images.dim().0 != labels.len() {
            return Err(Error::invalid(format!(
                "{} images vs {} labels",
                images.dim().0,
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= NUM_CLASSES) {
            return Err(Error::invalid(format!("label {bad} out of range")));
        }
        Ok(Pool { images, labels })
    }

    /// Load one split of an idx archive, keeping at most `limit` samples.
    pub fn load(dir: &Path, split: Split, limit: Option<usize>) -> Result<Pool<F>> {
        let raw = read_idx_images(&split.images_path(dir))?;
        let labels = read_idx_labels(&split.labels_path(dir))?;
        if raw.dim().0 != labels.len() {
            return Err(Error::Config(format!(
                "{}: image/label counts differ",
                dir.display()
            )));
        }
        let n = limit.map_or(raw.dim().0, |l| l.min(raw.dim().0));
        let (_, h, w) = raw.dim();
        let mut images = Array3::<F>::zeros((n, h, w));
        let scale = real::<F>(1.0 / 255.0);
        for (dst, &src) in images.iter_mut().zip(raw.slice(ndarray::s![..n, .., ..]).iter()) {
            *dst = real::<F>(src as f64) * scale;
        }
        Pool::new(images, labels[..n].to_vec())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Gather a labeled batch by index.
    pub fn batch(&self, indices: &[usize]) -> LabeledBatch<F> {
        let (_, h, w) = self.images.dim();
        let mut images = Array3::<F>::zeros((indices.len(), h, w));
        let mut labels = Vec::with_capacity(indices.len());
        for (i, &idx) in indices.iter().enumerate() {
            images
                .index_axis_mut(Axis(0), i)
                .assign(&self.images.index_axis(Axis(0), idx));
            labels.push(self.labels[idx]);
        }
        LabeledBatch { images, labels }
    }
}

/// A domain materialized from a base pool: every image deformed by the
/// spec's factor, base order preserved. Labels ride along only for
/// evaluation pools; adaptation consumes the images alone.
#[derive(Debug, Clone)]
pub struct RealizedDomain<F> {
    pub spec: DomainSpec,
    /// `[N × H × W]`, same order as the base pool.
    pub images: Array3<F>,
    pub labels: Option<Vec<u8>>,
}

impl<F: Scalar> RealizedDomain<F> {
    pub fn len(&self) -> usize {
        self.images.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Gather an unlabeled batch by index.
    pub fn unlabeled_batch(&self, indices: &[usize]) -> UnlabeledBatch<F> {
        let (_, h, w) = self.images.dim();
        let mut images = Array3::<F>::zeros((indices.len(), h, w));
        for (i, &idx) in indices.iter().enumerate() {
            images
                .index_axis_mut(Axis(0), i)
                .assign(&self.images.index_axis(Axis(0), idx));
        }
        UnlabeledBatch { images }
    }

    /// Labeled view for evaluation; errors if labels were dropped.
    pub fn labeled(&self) -> Result<LabeledBatch<F>> {
        let labels = self.labels.clone().ok_or_else(|| {
            Error::State("domain was realized without labels".into())
        })?;
        LabeledBatch::new(self.images.clone(), labels)
    }

    /// Epoch-shuffled index stream seeded by the domain spec.
    pub fn index_stream(&self) -> IndexStream {
        IndexStream::new(self.len(), self.spec.seed)
    }
}

/// Materialize `spec` over a base pool. Deformation is deterministic given
/// `(spec, base)`; the spec's seed only drives the index stream order.
pub fn realize_domain<F: Scalar>(
    base: &Pool<F>,
    spec: &DomainSpec,
    labeled: bool,
) -> Result<RealizedDomain<F>> {
    if base.is_empty() {
        return Err(Error::Resource("base dataset is empty".into()));
    }
    let images = deform_batch(&base.images.view(), spec.factor)?;
    Ok(RealizedDomain {
        spec: *spec,
        images,
        labels: labeled.then(|| base.labels.clone()),
    })
}

/// Infinite stream of sample indices: a fresh uniform shuffle per epoch,
/// seeded once, so equal specs replay the identical order.
#[derive(Debug, Clone)]
pub struct IndexStream {
    order: Vec<u32>,
    pos: usize,
    rng: ChaCha8Rng,
}

impl IndexStream {
    pub fn new(n: usize, seed: u64) -> IndexStream {
        assert!(n > 0, "cannot stream an empty domain");
        let mut stream = IndexStream {
            order: (0..n as u32).collect(),
            pos: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        stream.order.shuffle(&mut stream.rng);
        stream
    }

    pub fn next_index(&mut self) -> usize {
        if self.pos == self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.pos = 0;
        }
        let idx = self.order[self.pos] as usize;
        self.pos += 1;
        idx
    }

    pub fn next_chunk(&mut self, n: usize) -> Vec<usize> {
        (0..n).map(|_| self.next_index()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::digits::synthesize_dataset;
    use crate::data::idx::{write_idx_images, write_idx_labels};

    fn small_pool() -> Pool<f32> {
        let (raw, labels) = synthesize_dataset(20, 3);
        let images = raw.mapv(|v| v as f32 / 255.0);
        Pool::new(images, labels).unwrap()
    }

    #[test]
    fn identity_factor_realization_is_byte_identical() {
        let pool = small_pool();
        let spec = DomainSpec::new(1.0, 0, 99).unwrap();
        let domain = realize_domain(&pool, &spec, true).unwrap();
        assert_eq!(domain.images, pool.images);
        assert_eq!(domain.labels.as_deref(), Some(pool.labels.as_slice()));
    }

    #[test]
    fn unlabeled_realization_drops_labels() {
        let pool = small_pool();
        let spec = DomainSpec::new(0.5, 0, 1).unwrap();
        let domain = realize_domain(&pool, &spec, false).unwrap();
        assert!(domain.labels.is_none());
        assert!(domain.labeled().is_err());
    }

    #[test]
    fn equal_specs_replay_identical_stream_order() {
        let pool = small_pool();
        let spec = DomainSpec::new(0.7, 2, 17).unwrap();
        let a = realize_domain(&pool, &spec, false).unwrap();
        let b = realize_domain(&pool, &spec, false).unwrap();
        assert_eq!(a.images, b.images);
        let (mut sa, mut sb) = (a.index_stream(), b.index_stream());
        let order_a = sa.next_chunk(3 * pool.len());
        let order_b = sb.next_chunk(3 * pool.len());
        assert_eq!(order_a, order_b);
        // a different seed gives a different order
        let other = DomainSpec::new(0.7, 2, 18).unwrap();
        let c = realize_domain(&pool, &other, false).unwrap();
        assert_ne!(c.index_stream().next_chunk(pool.len()), order_a[..pool.len()]);
    }

    #[test]
    fn stream_visits_every_index_each_epoch() {
        let mut stream = IndexStream::new(7, 5);
        for _ in 0..3 {
            let mut epoch = stream.next_chunk(7);
            epoch.sort_unstable();
            assert_eq!(epoch, (0..7).collect::<Vec<_>>());
        }
    }

    #[test]
    fn empty_base_is_a_resource_error() {
        let pool = Pool::<f32> {
            images: Array3::zeros((0, 28, 28)),
            labels: vec![],
        };
        let spec = DomainSpec::new(0.5, 0, 1).unwrap();
        assert!(matches!(
            realize_domain(&pool, &spec, false),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn pool_load_respects_limit_and_scales_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let (images, labels) = synthesize_dataset(12, 4);
        write_idx_images(&Split::Train.images_path(dir.path()), &images).unwrap();
        write_idx_labels(&Split::Train.labels_path(dir.path()), &labels).unwrap();
        let pool: Pool<f32> = Pool::load(dir.path(), Split::Train, Some(5)).unwrap();
        assert_eq!(pool.len(), 5);
        assert!(pool.images.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let max = pool.images.iter().cloned().fold(0.0f32, f32::max);
        assert!(max > 0.9, "expected full-ink pixels, max {max}");
    }
}
