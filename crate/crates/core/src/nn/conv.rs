//! 2-D convolution (cross-correlation) with exact analytic gradients.

use super::tensor::Tensor4;
use crate::error::{Error, Result};
use crate::par;

/// Static configuration of one convolution stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvShape {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub padding: (usize, usize),
}

impl ConvShape {
    /// Output spatial dimensions for an input of (h, w).
    pub fn out_dims(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let (kh, kw) = self.kernel;
        let (sh, sw) = self.stride;
        let (ph, pw) = self.padding;
        if kh == 0 || kw == 0 || sh == 0 || sw == 0 {
            return Err(Error::Shape("kernel and stride must be positive".into()));
        }
        if h + 2 * ph < kh || w + 2 * pw < kw {
            return Err(Error::Shape(format!(
                "input {h}x{w} with padding {ph}x{pw} smaller than kernel {kh}x{kw}"
            )));
        }
        Ok(((h + 2 * ph - kh) / sh + 1, (w + 2 * pw - kw) / sw + 1))
    }

    /// Weight element count: out · in · kh · kw, laid out row-major in that
    /// index order.
    pub fn weight_len(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel.0 * self.kernel.1
    }

    #[inline]
    fn weight_at<'a>(&self, weights: &'a [f64], oc: usize, ic: usize) -> &'a [f64] {
        let k = self.kernel.0 * self.kernel.1;
        let start = (oc * self.in_channels + ic) * k;
        &weights[start..start + k]
    }
}

/// Cross-correlate `input` with `weights` and add per-channel `bias`.
pub fn conv2d_forward(
    input: &Tensor4,
    weights: &[f64],
    bias: &[f64],
    shape: &ConvShape,
) -> Result<Tensor4> {
    let (n, c, h, w) = input.shape();
    if c != shape.in_channels {
        return Err(Error::Shape(format!(
            "conv expects {} input channels, got {c}",
            shape.in_channels
        )));
    }
    if weights.len() != shape.weight_len() || bias.len() != shape.out_channels {
        return Err(Error::Shape("conv parameter length mismatch".into()));
    }
    let (oh, ow) = shape.out_dims(h, w)?;
    let mut out = Tensor4::zeros((n, shape.out_channels, oh, ow));
    let (_, kw) = shape.kernel;
    let (sh, sw) = shape.stride;
    let (ph, pw) = shape.padding;

    // Each (sample, out-channel) plane is written by exactly one task.
    par::for_each_chunk_mut(out.data_mut(), oh * ow, |plane_idx, out_plane| {
        let ni = plane_idx / shape.out_channels;
        let oc = plane_idx % shape.out_channels;
        out_plane.fill(bias[oc]);
        for ic in 0..shape.in_channels {
            let in_plane = input.plane(ni, ic);
            let kernel = shape.weight_at(weights, oc, ic);
            for (ki, &wgt) in kernel.iter().enumerate() {
                let kr = ki / kw;
                let kc = ki % kw;
                for or in 0..oh {
                    let ir = (or * sh + kr) as isize - ph as isize;
                    if ir < 0 || ir as usize >= h {
                        continue;
                    }
                    let in_row = &in_plane[ir as usize * w..(ir as usize + 1) * w];
                    let out_row = &mut out_plane[or * ow..(or + 1) * ow];
                    if sw == 1 {
                        // icol = ow' + kc - pw; restrict to the valid span
                        // so the inner loop is a branch-free axpy.
                        let lo = pw.saturating_sub(kc);
                        let hi = (w + pw - kc).min(ow);
                        if lo < hi {
                            let start = lo + kc - pw;
                            for (o, &x) in out_row[lo..hi]
                                .iter_mut()
                                .zip(&in_row[start..start + (hi - lo)])
                            {
                                *o += wgt * x;
                            }
                        }
                    } else {
                        for (oc_col, o) in out_row.iter_mut().enumerate() {
                            let icol = (oc_col * sw + kc) as isize - pw as isize;
                            if icol >= 0 && (icol as usize) < w {
                                *o += wgt * in_row[icol as usize];
                            }
                        }
                    }
                }
            }
        }
    });
    Ok(out)
}

/// Gradients of the convolution: (input grad, weight grad, bias grad).
///
/// `input` is the tensor that produced the forward output; `upstream` has
/// the forward output's shape.
pub fn conv2d_backward(
    input: &Tensor4,
    weights: &[f64],
    shape: &ConvShape,
    upstream: &Tensor4,
) -> (Tensor4, Vec<f64>, Vec<f64>) {
    let (n, _, h, w) = input.shape();
    let (_, _, oh, ow) = upstream.shape();
    let (kh, kw) = shape.kernel;
    let (sh, sw) = shape.stride;
    let (ph, pw) = shape.padding;
    let k = kh * kw;

    // Input gradient: each sample owned by one task.
    let mut input_grad = Tensor4::zeros(input.shape());
    par::for_each_chunk_mut(
        input_grad.data_mut(),
        shape.in_channels * h * w,
        |ni, sample_grad| {
            for oc in 0..shape.out_channels {
                let up_plane = upstream.plane(ni, oc);
                for ic in 0..shape.in_channels {
                    let grad_plane = &mut sample_grad[ic * h * w..(ic + 1) * h * w];
                    let kernel = shape.weight_at(weights, oc, ic);
                    for (ki, &wgt) in kernel.iter().enumerate() {
                        let kr = ki / kw;
                        let kc = ki % kw;
                        for or in 0..oh {
                            let ir = (or * sh + kr) as isize - ph as isize;
                            if ir < 0 || ir as usize >= h {
                                continue;
                            }
                            let up_row = &up_plane[or * ow..(or + 1) * ow];
                            let grad_row =
                                &mut grad_plane[ir as usize * w..(ir as usize + 1) * w];
                            if sw == 1 {
                                let lo = pw.saturating_sub(kc);
                                let hi = (w + pw - kc).min(ow);
                                if lo < hi {
                                    let start = lo + kc - pw;
                                    for (&u, g) in up_row[lo..hi]
                                        .iter()
                                        .zip(&mut grad_row[start..start + (hi - lo)])
                                    {
                                        *g += wgt * u;
                                    }
                                }
                            } else {
                                for (oc_col, &u) in up_row.iter().enumerate() {
                                    let icol =
                                        (oc_col * sw + kc) as isize - pw as isize;
                                    if icol >= 0 && (icol as usize) < w {
                                        grad_row[icol as usize] += wgt * u;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        },
    );

    // Weight gradients: each out-channel's slice owned by one task,
    // accumulating over samples in batch order.
    let mut weight_grad = vec![0.0; shape.weight_len()];
    let per_oc = shape.in_channels * k;
    par::for_each_chunk_mut(&mut weight_grad, per_oc, |oc, wg| {
        for ni in 0..n {
            let up_plane = upstream.plane(ni, oc);
            for ic in 0..shape.in_channels {
                let in_plane = input.plane(ni, ic);
                let wg_k = &mut wg[ic * k..(ic + 1) * k];
                for (ki, slot) in wg_k.iter_mut().enumerate() {
                    let kr = ki / kw;
                    let kc = ki % kw;
                    let mut acc = 0.0;
                    for or in 0..oh {
                        let ir = (or * sh + kr) as isize - ph as isize;
                        if ir < 0 || ir as usize >= h {
                            continue;
                        }
                        let in_row = &in_plane[ir as usize * w..(ir as usize + 1) * w];
                        let up_row = &up_plane[or * ow..(or + 1) * ow];
                        if sw == 1 {
                            let lo = pw.saturating_sub(kc);
                            let hi = (w + pw - kc).min(ow);
                            if lo < hi {
                                let start = lo + kc - pw;
                                acc += up_row[lo..hi]
                                    .iter()
                                    .zip(&in_row[start..start + (hi - lo)])
                                    .map(|(&u, &x)| u * x)
                                    .sum::<f64>();
                            }
                        } else {
                            for (oc_col, &u) in up_row.iter().enumerate() {
                                let icol = (oc_col * sw + kc) as isize - pw as isize;
                                if icol >= 0 && (icol as usize) < w {
                                    acc += u * in_row[icol as usize];
                                }
                            }
                        }
                    }
                    *slot += acc;
                }
            }
        }
    });

    let bias_grad = par::map_indexed(shape.out_channels, |oc| {
        (0..n)
            .map(|ni| upstream.plane(ni, oc).iter().sum::<f64>())
            .sum()
    });
    (input_grad, weight_grad, bias_grad)
}
