//! ReLU activation.

use super::tensor::Tensor4;

/// Elementwise `max(0, x)`.
pub fn relu_forward(x: &Tensor4) -> Tensor4 {
    let mut out = x.clone();
    for v in out.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

/// Mask the upstream gradient by `pre > 0` (zero gradient at the kink).
pub fn relu_backward(pre: &Tensor4, upstream: &Tensor4) -> Tensor4 {
    assert_eq!(pre.shape(), upstream.shape());
    let mut out = upstream.clone();
    for (g, &x) in out.data_mut().iter_mut().zip(pre.data()) {
        if x <= 0.0 {
            *g = 0.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::gradcheck::{central_diff, max_rel_error, DEFAULT_EPSILON};
    use super::*;
    use crate::seed;
    use rand::Rng;

    #[test]
    fn clamps_negatives() {
        let x = Tensor4::from_vec((1, 1, 1, 3), vec![-1.0, 0.0, 2.0]);
        assert_eq!(relu_forward(&x).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn gradient_masks_by_sign() {
        let pre = Tensor4::from_vec((1, 1, 1, 2), vec![-1.0, 2.0]);
        let up = Tensor4::from_vec((1, 1, 1, 2), vec![5.0, 7.0]);
        assert_eq!(relu_backward(&pre, &up).data(), &[0.0, 7.0]);
    }

    #[test]
    fn gradient_matches_finite_differences_away_from_kink() {
        let mut rng = seed::rng(411, &[]);
        // Draw inputs excluding |x| < 1e-3 so probes never cross the kink.
        let mut x: Vec<f64> = (0..60)
            .map(|_| {
                let v: f64 = rng.gen::<f64>() * 2.0 - 1.0;
                v.signum() * (v.abs() + 1e-3)
            })
            .collect();
        let proj: Vec<f64> = (0..60).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let shape = (2, 3, 2, 5);

        let t = Tensor4::from_vec(shape, x.clone());
        let up = Tensor4::from_vec(shape, proj.clone());
        let analytic = relu_backward(&t, &up);

        let numeric = central_diff(
            |v| {
                let y = relu_forward(&Tensor4::from_vec(shape, v.to_vec()));
                y.data().iter().zip(&proj).map(|(a, b)| a * b).sum()
            },
            &mut x,
            DEFAULT_EPSILON,
        );
        assert!(max_rel_error(analytic.data(), &numeric, 1e-3) < 1e-6);
    }
}
