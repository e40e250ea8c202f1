//! Flat parameter storage with a named-tensor layout.
//!
//! Every model component keeps its parameters in one contiguous `Vec<F>` and
//! describes the tensors inside it with a [`Layout`]. A flat record makes the
//! pieces this crate leans on cheap and exact: optimizer state, bitwise
//! hashing for freeze/warm-start contracts, checkpoint serialization, and
//! finite-difference probes that perturb single coordinates.

use crate::scalar::{real, Scalar};
use ndarray::{ArrayView1, ArrayView2, ArrayView4, ArrayViewMut1, ArrayViewMut2};
use rand::Rng;
use std::sync::Arc;

/// One named tensor inside a flat parameter block.
#[derive(Debug, Clone)]
pub struct TensorSpec {
    pub name: &'static str,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub len: usize,
}

/// Ordered set of tensors; shared by a parameter block and its gradients.
#[derive(Debug)]
pub struct Layout {
    tensors: Vec<TensorSpec>,
    total: usize,
}

impl Layout {
    pub fn new(defs: &[(&'static str, &[usize])]) -> Arc<Layout> {
        let mut tensors = Vec::with_capacity(defs.len());
        let mut offset = 0;
        for (name, shape) in defs {
            let len: usize = shape.iter().product();
            tensors.push(TensorSpec {
                name,
                shape: shape.to_vec(),
                offset,
                len,
            });
            offset += len;
        }
        Arc::new(Layout {
            tensors,
            total: offset,
        })
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn tensors(&self) -> &[TensorSpec] {
        &self.tensors
    }

    pub fn spec(&self, name: &str) -> &TensorSpec {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .unwrap_or_else(|| panic!("no tensor named {name} in layout"))
    }
}

/// Flat parameter (or gradient) block over a shared [`Layout`].
#[derive(Debug, Clone)]
pub struct ParamSet<F: Scalar> {
    layout: Arc<Layout>,
    data: Vec<F>,
}

impl<F: Scalar> ParamSet<F> {
    pub fn zeros(layout: Arc<Layout>) -> Self {
        let n = layout.total();
        ParamSet {
            layout,
            data: vec![F::zero(); n],
        }
    }

    /// Fan-in-scaled uniform init: weights drawn from
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, biases zero. Fan-in is the
    /// product of all trailing shape dimensions; rank-1 tensors are biases.
    pub fn fan_in_uniform<R: Rng>(layout: Arc<Layout>, rng: &mut R) -> Self {
        let mut set = ParamSet::zeros(layout.clone());
        for spec in layout.tensors() {
            if spec.shape.len() < 2 {
                continue;
            }
            let fan_in: usize = spec.shape[1..].iter().product();
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in &mut set.data[spec.offset..spec.offset + spec.len] {
                let u: f64 = rng.random();
                *v = real((2.0 * u - 1.0) * bound);
            }
        }
        set
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    fn chunk(&self, name: &str) -> (&[F], &TensorSpec) {
        let spec = self.layout.spec(name);
        (&self.data[spec.offset..spec.offset + spec.len], spec)
    }

    pub fn vec1(&self, name: &str) -> ArrayView1<'_, F> {
        let (buf, spec) = self.chunk(name);
        debug_assert_eq!(spec.shape.len(), 1);
        ArrayView1::from_shape(spec.shape[0], buf).expect("layout/shape mismatch")
    }

    pub fn mat(&self, name: &str) -> ArrayView2<'_, F> {
        let (buf, spec) = self.chunk(name);
        debug_assert_eq!(spec.shape.len(), 2);
        ArrayView2::from_shape((spec.shape[0], spec.shape[1]), buf).expect("layout/shape mismatch")
    }

    /// View a rank-4 tensor flattened to `[rows, cols]`; used to treat conv
    /// kernels as matmul operands.
    pub fn mat_flat(&self, name: &str, rows: usize) -> ArrayView2<'_, F> {
        let (buf, spec) = self.chunk(name);
        assert_eq!(spec.len % rows, 0, "tensor {name} not divisible into rows");
        ArrayView2::from_shape((rows, spec.len / rows), buf).expect("layout/shape mismatch")
    }

    pub fn tensor4(&self, name: &str) -> ArrayView4<'_, F> {
        let (buf, spec) = self.chunk(name);
        debug_assert_eq!(spec.shape.len(), 4);
        ArrayView4::from_shape(
            (spec.shape[0], spec.shape[1], spec.shape[2], spec.shape[3]),
            buf,
        )
        .expect("layout/shape mismatch")
    }

    pub fn vec1_mut(&mut self, name: &str) -> ArrayViewMut1<'_, F> {
        let spec = self.layout.spec(name).clone();
        ArrayViewMut1::from_shape(spec.shape[0], &mut self.data[spec.offset..spec.offset + spec.len])
            .expect("layout/shape mismatch")
    }

    pub fn mat_mut(&mut self, name: &str) -> ArrayViewMut2<'_, F> {
        let spec = self.layout.spec(name).clone();
        ArrayViewMut2::from_shape(
            (spec.shape[0], spec.shape[1]),
            &mut self.data[spec.offset..spec.offset + spec.len],
        )
        .expect("layout/shape mismatch")
    }

    pub fn mat_flat_mut(&mut self, name: &str, rows: usize) -> ArrayViewMut2<'_, F> {
        let spec = self.layout.spec(name).clone();
        assert_eq!(spec.len % rows, 0);
        ArrayViewMut2::from_shape(
            (rows, spec.len / rows),
            &mut self.data[spec.offset..spec.offset + spec.len],
        )
        .expect("layout/shape mismatch")
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Accumulate another gradient block of the same layout.
    pub fn add_assign(&mut self, other: &ParamSet<F>) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += *b;
        }
    }

    /// FNV-1a over the raw bit patterns. Bitwise: any parameter mutation,
    /// including sign of zero, changes the hash.
    pub fn hash64(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for v in &self.data {
            let bits = v.bit_pattern();
            for shift in [0u32, 8, 16, 24, 32, 40, 48, 56] {
                h ^= (bits >> shift) & 0xff;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layout() -> Arc<Layout> {
        Layout::new(&[("w", &[4, 3]), ("b", &[4]), ("k", &[2, 3, 3, 3])])
    }

    #[test]
    fn offsets_and_views() {
        let p: ParamSet<f64> = ParamSet::zeros(layout());
        assert_eq!(p.len(), 12 + 4 + 54);
        assert_eq!(p.mat("w").shape(), &[4, 3]);
        assert_eq!(p.vec1("b").len(), 4);
        assert_eq!(p.tensor4("k").shape(), &[2, 3, 3, 3]);
        assert_eq!(p.mat_flat("k", 2).shape(), &[2, 27]);
    }

    #[test]
    fn fan_in_bounds_and_zero_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p: ParamSet<f32> = ParamSet::fan_in_uniform(layout(), &mut rng);
        let w_bound = 1.0 / 3f32.sqrt();
        for &v in p.mat("w").iter() {
            assert!(v.abs() <= w_bound);
        }
        let k_bound = 1.0 / 27f32.sqrt();
        for &v in p.tensor4("k").iter() {
            assert!(v.abs() <= k_bound);
        }
        assert!(p.vec1("b").iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a: ParamSet<f32> =
            ParamSet::fan_in_uniform(layout(), &mut ChaCha8Rng::seed_from_u64(3));
        let b: ParamSet<f32> =
            ParamSet::fan_in_uniform(layout(), &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a.hash64(), b.hash64());
        let c: ParamSet<f32> =
            ParamSet::fan_in_uniform(layout(), &mut ChaCha8Rng::seed_from_u64(4));
        assert_ne!(a.hash64(), c.hash64());
    }

    #[test]
    fn hash_sees_single_bit_flips() {
        let mut p: ParamSet<f32> =
            ParamSet::fan_in_uniform(layout(), &mut ChaCha8Rng::seed_from_u64(3));
        let h0 = p.hash64();
        p.data_mut()[5] = -p.data_mut()[5];
        assert_ne!(h0, p.hash64());
    }
}
