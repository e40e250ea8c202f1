//! Ring buffer the adaptation loop samples target images from.

use crate::data::{UnlabeledBatch, IMAGE_SIDE};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use ndarray::{Array2, Array3, ArrayView3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fixed-capacity ring of single images with uniform sampling (with
/// replacement) over the current contents. New pushes overwrite the oldest
/// entries once the ring is full.
#[derive(Debug, Clone)]
pub struct SampleBuffer<F> {
    capacity: usize,
    images: Vec<Array2<F>>,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl<F: Scalar> SampleBuffer<F> {
    pub fn new(capacity: usize, seed: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("buffer capacity must be at least 1"));
        }
        Ok(SampleBuffer {
            capacity,
            images: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Append every image in the stack, overwriting the oldest entries when
    /// the ring is full.
    pub fn push_images(&mut self, images: &ArrayView3<F>) {
        for image in images.axis_iter(Axis(0)) {
            if self.images.len() < self.capacity {
                self.images.push(image.to_owned());
            } else {
                self.images[self.cursor] = image.to_owned();
                self.cursor = (self.cursor + 1) % self.capacity;
            }
        }
    }

    /// Uniform sample of `batch` images, with replacement.
    pub fn sample(&mut self, batch: usize) -> Result<UnlabeledBatch<F>> {
        if self.images.is_empty() {
            return Err(Error::State("sampling from an empty buffer".into()));
        }
        let mut out = Array3::zeros((batch, IMAGE_SIDE, IMAGE_SIDE));
        for i in 0..batch {
            let pick = self.rng.random_range(0..self.images.len());
            out.index_axis_mut(Axis(0), i).assign(&self.images[pick]);
        }
        UnlabeledBatch::new(out)
    }
}
