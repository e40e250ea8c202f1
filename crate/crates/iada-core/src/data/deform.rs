//! Vertical compression of digit images.
//!
//! The domain shift in the benchmark is a single controlled deformation:
//! the digit content is rescaled to `round(H · factor)` rows by
//! area-weighted resampling, re-centered vertically, and padded with black.
//! Width is untouched. `factor = 1.0` is the exact identity, so the source
//! domain is literally the undeformed dataset.

use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};
use ndarray::{Array2, ArrayView2};

fn check_factor(factor: f64) -> Result<()> {
    if factor > 0.0 && factor <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "compression factor must lie in (0, 1], got {factor}"
        )))
    }
}

/// Number of output rows the digit content occupies.
pub fn compressed_rows(h: usize, factor: f64) -> usize {
    ((h as f64 * factor).round() as usize).max(1)
}

/// First row of the centered content band.
pub fn band_offset(h: usize, factor: f64) -> usize {
    (h - compressed_rows(h, factor)) / 2
}

/// Row-resampling weights: entry `(r, s)` is the fraction of output row `r`
/// covered by input row `s`, so each output row is a convex combination of
/// input rows and pixel range is preserved.
pub fn resample_weights<F: Scalar>(h: usize, out_h: usize) -> Array2<F> {
    let k = h as f64 / out_h as f64;
    let mut w = Array2::<F>::zeros((out_h, h));
    for r in 0..out_h {
        let lo = r as f64 * k;
        let hi = (r + 1) as f64 * k;
        let s0 = lo.floor() as usize;
        let s1 = (hi.ceil() as usize).min(h);
        for s in s0..s1 {
            let overlap = hi.min((s + 1) as f64) - lo.max(s as f64);
            if overlap > 0.0 {
                w[(r, s)] = real::<F>(overlap / k);
            }
        }
    }
    w
}

/// Compress one `[H × W]` image vertically by `factor`.
pub fn deform_image<F: Scalar>(image: &ArrayView2<F>, factor: f64) -> Result<Array2<F>> {
    check_factor(factor)?;
    if factor == 1.0 {
        return Ok(image.to_owned());
    }
    let (h, w) = image.dim();
    let out_h = compressed_rows(h, factor);
    let weights = resample_weights::<F>(h, out_h);
    let mut out = Array2::<F>::zeros((h, w));
    let band = weights.dot(image);
    let offset = band_offset(h, factor);
    out.slice_mut(ndarray::s![offset..offset + out_h, ..])
        .assign(&band);
    Ok(out)
}

/// Compress every image of a `[N × H × W]` stack with one shared weight
/// matrix.
pub fn deform_batch<F: Scalar>(
    images: &ndarray::ArrayView3<F>,
    factor: f64,
) -> Result<ndarray::Array3<F>> {
    check_factor(factor)?;
    if factor == 1.0 {
        return Ok(images.to_owned());
    }
    let (n, h, w) = images.dim();
    let out_h = compressed_rows(h, factor);
    let weights = resample_weights::<F>(h, out_h);
    let offset = band_offset(h, factor);
    let mut out = ndarray::Array3::<F>::zeros((n, h, w));
    for i in 0..n {
        let band = weights.dot(&images.index_axis(ndarray::Axis(0), i));
        out.slice_mut(ndarray::s![i, offset..offset + out_h, ..])
            .assign(&band);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((28, 28), |_| rng.random::<f64>())
    }

    /// Independent oracle: scatter each *input* row's mass onto the output
    /// rows it overlaps (dual of the gather formulation in the module).
    fn scatter_resample(image: &Array2<f64>, out_h: usize) -> Array2<f64> {
        let (h, w) = image.dim();
        let k = h as f64 / out_h as f64;
        let mut out = Array2::<f64>::zeros((out_h, w));
        for s in 0..h {
            let lo = s as f64;
            let hi = (s + 1) as f64;
            for r in 0..out_h {
                let rlo = r as f64 * k;
                let rhi = (r + 1) as f64 * k;
                let overlap = (hi.min(rhi) - lo.max(rlo)).max(0.0);
                if overlap > 0.0 {
                    for c in 0..w {
                        out[(r, c)] += image[(s, c)] * overlap / k;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn factor_one_is_bitwise_identity() {
        let img = random_image(3).mapv(|v| v as f32);
        let out = deform_image(&img.view(), 1.0).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn zero_image_stays_zero() {
        let img = Array2::<f64>::zeros((28, 28));
        let out = deform_image(&img.view(), 0.7).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn half_factor_band_spans_rows_7_to_20() {
        // all 28 rows nonzero on input; content must land exactly in the
        // centered 14-row band
        let img = Array2::<f64>::from_elem((28, 28), 0.8);
        let out = deform_image(&img.view(), 0.5).unwrap();
        let nonzero: Vec<usize> = (0..28)
            .filter(|&r| out.row(r).iter().any(|&v| v != 0.0))
            .collect();
        assert_eq!(nonzero.first(), Some(&7));
        assert_eq!(nonzero.last(), Some(&20));
        assert_eq!(nonzero.len(), 14);
    }

    #[test]
    fn gather_matches_scatter_oracle() {
        for (seed, factor) in [(1u64, 0.5f64), (2, 0.7), (3, 0.9), (4, 0.33)] {
            let img = random_image(seed);
            let out = deform_image(&img.view(), factor).unwrap();
            let out_h = compressed_rows(28, factor);
            let oracle = scatter_resample(&img, out_h);
            let offset = band_offset(28, factor);
            for r in 0..out_h {
                for c in 0..28 {
                    let a = out[(offset + r, c)];
                    let b = oracle[(r, c)];
                    assert!((a - b).abs() < 1e-12, "factor {factor} row {r}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn batch_agrees_with_per_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let stack = ndarray::Array3::from_shape_fn((3, 28, 28), |_| rng.random::<f64>());
        let batch = deform_batch(&stack.view(), 0.6).unwrap();
        for i in 0..3 {
            let single =
                deform_image(&stack.index_axis(ndarray::Axis(0), i), 0.6).unwrap();
            assert_eq!(batch.index_axis(ndarray::Axis(0), i), single.view());
        }
    }

    #[test]
    fn invalid_factors_rejected() {
        let img = random_image(1);
        for f in [0.0, -0.2, 1.01, f64::NAN] {
            assert!(matches!(
                deform_image(&img.view(), f),
                Err(Error::InvalidArgument(_))
            ));
        }
    }

    proptest! {
        #[test]
        fn band_containment_and_range(seed in 0u64..1000, factor in 0.05f64..=1.0) {
            let img = random_image(seed);
            let out = deform_image(&img.view(), factor).unwrap();
            let rows = compressed_rows(28, factor);
            let offset = band_offset(28, factor);
            for r in 0..28 {
                let inside = r >= offset && r < offset + rows;
                if !inside {
                    prop_assert!(out.row(r).iter().all(|&v| v == 0.0));
                }
            }
            prop_assert!(out.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }

        #[test]
        fn resample_rows_are_convex(out_h in 1usize..=28) {
            let w = resample_weights::<f64>(28, out_h);
            for row in w.rows() {
                prop_assert!((row.sum() - 1.0).abs() < 1e-12);
                prop_assert!(row.iter().all(|&v| v >= 0.0));
            }
        }
    }
}
