//! Fully-connected classifier head.

use super::tensor::Mat;
use crate::error::{Error, Result};

/// `z = x Wᵀ + b` with W stored row-major as (out, in).
pub fn linear_forward(x: &Mat, weights: &[f64], bias: &[f64], out_dim: usize) -> Result<Mat> {
    let in_dim = x.cols();
    if weights.len() != out_dim * in_dim || bias.len() != out_dim {
        return Err(Error::Shape(format!(
            "linear expects {}x{in_dim} weights, got {} values",
            out_dim,
            weights.len()
        )));
    }
    let mut out = Mat::zeros(x.rows(), out_dim);
    for r in 0..x.rows() {
        let xr = x.row(r);
        let or = out.row_mut(r);
        for (j, o) in or.iter_mut().enumerate() {
            let wr = &weights[j * in_dim..(j + 1) * in_dim];
            let mut acc = bias[j];
            for (xv, wv) in xr.iter().zip(wr) {
                acc += xv * wv;
            }
            *o = acc;
        }
    }
    Ok(out)
}

/// Gradients: (input grad, weight grad, bias grad).
pub fn linear_backward(
    x: &Mat,
    weights: &[f64],
    upstream: &Mat,
) -> (Mat, Vec<f64>, Vec<f64>) {
    let in_dim = x.cols();
    let out_dim = upstream.cols();
    let mut dx = Mat::zeros(x.rows(), in_dim);
    let mut dw = vec![0.0; out_dim * in_dim];
    let mut db = vec![0.0; out_dim];
    for r in 0..x.rows() {
        let xr = x.row(r);
        let ur = upstream.row(r);
        let dxr = dx.row_mut(r);
        for (j, &u) in ur.iter().enumerate() {
            db[j] += u;
            let wr = &weights[j * in_dim..(j + 1) * in_dim];
            let dwr = &mut dw[j * in_dim..(j + 1) * in_dim];
            for i in 0..in_dim {
                dxr[i] += u * wr[i];
                dwr[i] += u * xr[i];
            }
        }
    }
    (dx, dw, db)
}

#[cfg(test)]
mod tests {
    use super::super::gradcheck::{central_diff, max_rel_error, DEFAULT_EPSILON};
    use super::*;
    use crate::seed;
    use rand::Rng;

    #[test]
    fn identity_weights_pass_through() {
        let x = Mat::from_vec(1, 3, vec![1.0, -2.0, 0.5]);
        let w = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let y = linear_forward(&x, &w, &[0.0; 3], 3).unwrap();
        assert_eq!(y.row(0), x.row(0));
    }

    #[test]
    fn small_arithmetic_case() {
        // W = [1, 1], x = [2, 3], b = 1 -> z = 6.
        let x = Mat::from_vec(1, 2, vec![2.0, 3.0]);
        let y = linear_forward(&x, &[1.0, 1.0], &[1.0], 1).unwrap();
        assert_eq!(y.at(0, 0), 6.0);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = seed::rng(441, &[]);
        let (n, fin, fout) = (3, 7, 4);
        let mut x: Vec<f64> = (0..n * fin).map(|_| rng.gen::<f64>() - 0.5).collect();
        let mut w: Vec<f64> = (0..fout * fin).map(|_| rng.gen::<f64>() - 0.5).collect();
        let mut b: Vec<f64> = (0..fout).map(|_| rng.gen::<f64>() - 0.5).collect();
        let proj: Vec<f64> = (0..n * fout).map(|_| rng.gen::<f64>() - 0.5).collect();

        let loss = |xv: &[f64], wv: &[f64], bv: &[f64]| {
            let m = Mat::from_vec(n, fin, xv.to_vec());
            let y = linear_forward(&m, wv, bv, fout).unwrap();
            y.data().iter().zip(&proj).map(|(a, b)| a * b).sum::<f64>()
        };

        let m = Mat::from_vec(n, fin, x.clone());
        let up = Mat::from_vec(n, fout, proj.clone());
        let (dx, dw, db) = linear_backward(&m, &w, &up);

        let w_c = w.clone();
        let b_c = b.clone();
        let nx = central_diff(|v| loss(v, &w_c, &b_c), &mut x, DEFAULT_EPSILON);
        let x_c = x.clone();
        let nw = central_diff(|v| loss(&x_c, v, &b_c), &mut w, DEFAULT_EPSILON);
        let nb = central_diff(|v| loss(&x_c, &w_c, v), &mut b, DEFAULT_EPSILON);

        assert!(max_rel_error(dx.data(), &nx, 1e-3) < 1e-6);
        assert!(max_rel_error(&dw, &nw, 1e-3) < 1e-6);
        assert!(max_rel_error(&db, &nb, 1e-3) < 1e-6);
    }

    #[test]
    fn rejects_feature_mismatch() {
        let x = Mat::zeros(1, 3);
        assert!(matches!(
            linear_forward(&x, &[0.0; 4], &[0.0; 2], 2),
            Err(Error::Shape(_))
        ));
    }
}
