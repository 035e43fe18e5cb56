//! 2-D max-pooling with argmax routing.

use super::tensor::Tensor4;
use crate::error::{Error, Result};
use crate::par;

/// Window and stride of one pooling stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolShape {
    pub window: (usize, usize),
    pub stride: (usize, usize),
}

impl PoolShape {
    pub fn out_dims(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let (wh, ww) = self.window;
        let (sh, sw) = self.stride;
        if wh == 0 || ww == 0 || sh == 0 || sw == 0 {
            return Err(Error::Shape("pool window and stride must be positive".into()));
        }
        if wh > h || ww > w {
            return Err(Error::Shape(format!(
                "pool window {wh}x{ww} larger than input {h}x{w}"
            )));
        }
        Ok(((h - wh) / sh + 1, (w - ww) / sw + 1))
    }
}

/// Per-window maximum. Also returns, for every output element, the flat
/// input offset of its maximum (first occurrence on ties, scanning the
/// window row-major) for gradient routing.
pub fn maxpool2d_forward(input: &Tensor4, shape: &PoolShape) -> Result<(Tensor4, Vec<usize>)> {
    let (n, c, h, w) = input.shape();
    let (oh, ow) = shape.out_dims(h, w)?;
    let (wh, ww) = shape.window;
    let (sh, sw) = shape.stride;

    let mut out = Tensor4::zeros((n, c, oh, ow));
    let mut argmax = vec![0usize; out.len()];
    let planes = n * c;
    let plane_in = h * w;
    let plane_out = oh * ow;

    // Interior mutability across disjoint planes via chunk iteration on
    // both buffers in lockstep.
    let out_data = out.data_mut();
    par::for_each_chunk_mut(&mut argmax, plane_out, |p, arg_plane| {
        let in_plane = &input.data()[p * plane_in..(p + 1) * plane_in];
        for or in 0..oh {
            for ocol in 0..ow {
                let mut best = f64::NEG_INFINITY;
                let mut best_off = 0usize;
                for kr in 0..wh {
                    let ir = or * sh + kr;
                    for kc in 0..ww {
                        let ic = ocol * sw + kc;
                        let v = in_plane[ir * w + ic];
                        if v > best {
                            best = v;
                            best_off = p * plane_in + ir * w + ic;
                        }
                    }
                }
                arg_plane[or * ow + ocol] = best_off;
            }
        }
    });
    par::for_each_chunk_mut(out_data, plane_out, |p, out_plane| {
        for (o, &src) in out_plane.iter_mut().zip(&argmax[p * plane_out..]) {
            *o = input.data()[src];
        }
    });
    debug_assert_eq!(argmax.len(), planes * plane_out);
    Ok((out, argmax))
}

/// Route each upstream gradient to its argmax position.
pub fn maxpool2d_backward(
    input_shape: (usize, usize, usize, usize),
    argmax: &[usize],
    upstream: &Tensor4,
) -> Tensor4 {
    assert_eq!(argmax.len(), upstream.len());
    let mut out = Tensor4::zeros(input_shape);
    let data = out.data_mut();
    for (&src, &g) in argmax.iter().zip(upstream.data()) {
        data[src] += g;
    }
    out
}
