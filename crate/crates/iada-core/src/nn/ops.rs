//! Forward/backward primitives: dense layers, strided 2-d convolution via
//! im2col, exponential-linear units, sigmoid, softmax, global average pooling.
//!
//! Convolutions lower to one matmul per layer so the batch dimension amortizes
//! well on the CPU. Backward passes return gradients for parameters and, where
//! needed, for inputs, so callers can chain encoders behind the discriminator.

use crate::scalar::{real, Scalar};
use ndarray::{Array1, Array2, Array4, ArrayView1, ArrayView2, Axis};

/// Geometry of one conv layer application.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub batch: usize,
    pub in_ch: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeom {
    pub fn new(
        batch: usize,
        in_ch: usize,
        in_h: usize,
        in_w: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    ) -> Self {
        let out_h = (in_h + 2 * pad - kernel) / stride + 1;
        let out_w = (in_w + 2 * pad - kernel) / stride + 1;
        ConvGeom {
            batch,
            in_ch,
            in_h,
            in_w,
            out_ch,
            kernel,
            stride,
            pad,
            out_h,
            out_w,
        }
    }

    pub fn rows(&self) -> usize {
        self.batch * self.out_h * self.out_w
    }

    pub fn patch_len(&self) -> usize {
        self.in_ch * self.kernel * self.kernel
    }
}

/// Unfold input patches into a `[B*OH*OW, C*K*K]` matrix. Out-of-image taps
/// stay zero (black padding).
pub fn im2col<F: Scalar>(x: &Array4<F>, g: &ConvGeom) -> Array2<F> {
    let mut cols = Array2::<F>::zeros((g.rows(), g.patch_len()));
    let xs = x.as_slice().expect("im2col needs standard layout");
    let cs = cols.as_slice_mut().unwrap();
    let (h, w, k) = (g.in_h, g.in_w, g.kernel);
    let patch = g.patch_len();
    for b in 0..g.batch {
        for oh in 0..g.out_h {
            let ih0 = (oh * g.stride) as isize - g.pad as isize;
            for ow in 0..g.out_w {
                let iw0 = (ow * g.stride) as isize - g.pad as isize;
                let row = ((b * g.out_h + oh) * g.out_w + ow) * patch;
                for c in 0..g.in_ch {
                    let xbase = (b * g.in_ch + c) * h * w;
                    let cbase = row + c * k * k;
                    for kh in 0..k {
                        let ih = ih0 + kh as isize;
                        if ih < 0 || ih >= h as isize {
                            continue;
                        }
                        let xrow = xbase + ih as usize * w;
                        let crow = cbase + kh * k;
                        for kw in 0..k {
                            let iw = iw0 + kw as isize;
                            if iw < 0 || iw >= w as isize {
                                continue;
                            }
                            cs[crow + kw] = xs[xrow + iw as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatter-add patch gradients back onto the input.
pub fn col2im<F: Scalar>(dcols: &Array2<F>, g: &ConvGeom) -> Array4<F> {
    let mut dx = Array4::<F>::zeros((g.batch, g.in_ch, g.in_h, g.in_w));
    let ds = dcols.as_slice().expect("col2im needs standard layout");
    let xs = dx.as_slice_mut().unwrap();
    let (h, w, k) = (g.in_h, g.in_w, g.kernel);
    let patch = g.patch_len();
    for b in 0..g.batch {
        for oh in 0..g.out_h {
            let ih0 = (oh * g.stride) as isize - g.pad as isize;
            for ow in 0..g.out_w {
                let iw0 = (ow * g.stride) as isize - g.pad as isize;
                let row = ((b * g.out_h + oh) * g.out_w + ow) * patch;
                for c in 0..g.in_ch {
                    let xbase = (b * g.in_ch + c) * h * w;
                    let cbase = row + c * k * k;
                    for kh in 0..k {
                        let ih = ih0 + kh as isize;
                        if ih < 0 || ih >= h as isize {
                            continue;
                        }
                        let xrow = xbase + ih as usize * w;
                        let crow = cbase + kh * k;
                        for kw in 0..k {
                            let iw = iw0 + kw as isize;
                            if iw < 0 || iw >= w as isize {
                                continue;
                            }
                            xs[xrow + iw as usize] += ds[crow + kw];
                        }
                    }
                }
            }
        }
    }
    dx
}

/// Convolution forward. `w_mat` is the kernel flattened to `[OC, C*K*K]`.
/// Returns the output feature map and the im2col matrix for the backward pass.
pub fn conv2d_forward<F: Scalar>(
    x: &Array4<F>,
    w_mat: &ArrayView2<F>,
    b: &ArrayView1<F>,
    g: &ConvGeom,
) -> (Array4<F>, Array2<F>) {
    let cols = im2col(x, g);
    let mut y2 = cols.dot(&w_mat.t());
    y2 += b;
    let y = y2
        .into_shape_with_order((g.batch, g.out_h, g.out_w, g.out_ch))
        .unwrap()
        .permuted_axes([0, 3, 1, 2])
        .as_standard_layout()
        .to_owned();
    (y, cols)
}

/// Convolution backward from `dy [B, OC, OH, OW]`.
/// Returns `(dx, dw_mat, db)`; pass `need_dx = false` for the first layer.
pub fn conv2d_backward<F: Scalar>(
    dy: &Array4<F>,
    cols: &Array2<F>,
    w_mat: &ArrayView2<F>,
    g: &ConvGeom,
    need_dx: bool,
) -> (Option<Array4<F>>, Array2<F>, Array1<F>) {
    let dy2 = dy
        .view()
        .permuted_axes([0, 2, 3, 1])
        .as_standard_layout()
        .to_owned()
        .into_shape_with_order((g.rows(), g.out_ch))
        .unwrap();
    let dw = dy2.t().dot(cols);
    let db = dy2.sum_axis(Axis(0));
    let dx = if need_dx {
        let dcols = dy2.dot(w_mat);
        Some(col2im(&dcols, g))
    } else {
        None
    };
    (dx, dw, db)
}

/// Dense layer: `y = x · wᵀ + b` with `x [B, in]`, `w [out, in]`.
pub fn dense<F: Scalar>(x: &ArrayView2<F>, w: &ArrayView2<F>, b: &ArrayView1<F>) -> Array2<F> {
    let mut y = x.dot(&w.t());
    y += b;
    y
}

/// Dense backward; returns `(dx, dw, db)`.
pub fn dense_backward<F: Scalar>(
    x: &ArrayView2<F>,
    w: &ArrayView2<F>,
    dy: &ArrayView2<F>,
) -> (Array2<F>, Array2<F>, Array1<F>) {
    let dx = dy.dot(w);
    let dw = dy.t().dot(x);
    let db = dy.sum_axis(Axis(0));
    (dx, dw, db)
}

/// Exponential-linear unit, elementwise in place: `x` for `x > 0`,
/// `exp(x) - 1` otherwise.
pub fn elu_inplace<F: Scalar, D: ndarray::Dimension>(x: &mut ndarray::Array<F, D>) {
    x.mapv_inplace(|v| if v > F::zero() { v } else { v.exp() - F::one() });
}

/// ELU backward from the post-activation value `y`: slope 1 where `y > 0`,
/// `y + 1` elsewhere (equal to `exp(x)` there).
pub fn elu_backward<F: Scalar, D: ndarray::Dimension>(
    y: &ndarray::Array<F, D>,
    dy: &ndarray::Array<F, D>,
) -> ndarray::Array<F, D> {
    let mut dx = dy.clone();
    dx.zip_mut_with(y, |d, &yv| {
        if yv <= F::zero() {
            *d = *d * (yv + F::one());
        }
    });
    dx
}

pub fn sigmoid<F: Scalar>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows<F: Scalar>(logits: &ArrayView2<F>) -> Array2<F> {
    let mut out = logits.to_owned();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(F::neg_infinity(), F::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Mean over the spatial dimensions: `[B, C, H, W] -> [B, C]`.
pub fn global_avg_pool<F: Scalar>(x: &Array4<F>) -> Array2<F> {
    let (b, c, h, w) = x.dim();
    let scale = real::<F>(1.0 / (h * w) as f64);
    let mut y = Array2::<F>::zeros((b, c));
    for ((bi, ci, _, _), &v) in x.indexed_iter() {
        y[(bi, ci)] += v;
    }
    y.mapv_inplace(|v| v * scale);
    y
}

/// Spread `dy [B, C]` evenly back over the pooled window.
pub fn global_avg_pool_backward<F: Scalar>(
    dy: &ArrayView2<F>,
    h: usize,
    w: usize,
) -> Array4<F> {
    let (b, c) = dy.dim();
    let scale = real::<F>(1.0 / (h * w) as f64);
    let mut dx = Array4::<F>::zeros((b, c, h, w));
    for ((bi, ci, _, _), v) in dx.indexed_iter_mut() {
        *v = dy[(bi, ci)] * scale;
    }
    dx
}
