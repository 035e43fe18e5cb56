//! Complex-to-real tensor packing.

use crate::channel::CsiMatrix;
use crate::error::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;

/// Pack a complex M x B matrix into a real M x 2B tensor.
///
/// Column 2b holds the real part of beam b and column 2b+1 the imaginary
/// part, so the packing is a lossless isometry (Frobenius norms agree).
pub fn to_real_tensor(csi: &CsiMatrix) -> Result<Array2<f64>> {
    let (m, b) = csi.dim();
    let mut out = Array2::<f64>::zeros((m, 2 * b));
    for ((row, col), z) in csi.indexed_iter() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFinite("CSI matrix"));
        }
        out[[row, 2 * col]] = z.re;
        out[[row, 2 * col + 1]] = z.im;
    }
    Ok(out)
}

/// Exact inverse of [`to_real_tensor`].
pub fn from_real_tensor(tensor: &Array2<f64>) -> Result<CsiMatrix> {
    let (m, cols) = tensor.dim();
    if cols % 2 != 0 {
        return Err(Error::Shape(format!(
            "packed tensor needs an even column count, got {cols}"
        )));
    }
    let b = cols / 2;
    let mut out = CsiMatrix::zeros((m, b));
    for row in 0..m {
        for col in 0..b {
            out[[row, col]] = Complex64::new(tensor[[row, 2 * col]], tensor[[row, 2 * col + 1]]);
        }
    }
    Ok(out)
}
