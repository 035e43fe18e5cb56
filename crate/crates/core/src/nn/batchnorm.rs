//! Batch normalization over channels (2-D) and features (1-D).
//!
//! Train mode normalizes by the biased batch statistics, applies
//! gamma/beta, and folds the batch estimates into running statistics with
//! momentum (running variance uses the unbiased estimate). Eval mode
//! normalizes by the running statistics. The backward pass includes the
//! gradient through the batch statistics:
//!
//! `dx = γ / √(σ²+ε) · (dy − mean(dy) − x̂ · mean(dy·x̂))`

use super::tensor::{Mat, Tensor4};
use crate::error::{Error, Result};

/// Forward cache: normalized values and per-channel inverse std.
#[derive(Debug, Clone)]
pub struct Bn2dCache {
    pub x_hat: Tensor4,
    pub inv_std: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Bn1dCache {
    pub x_hat: Mat,
    pub inv_std: Vec<f64>,
}

fn check_population(pop: usize, what: &str) -> Result<()> {
    if pop < 2 {
        return Err(Error::Shape(format!(
            "batch norm needs a population of at least 2 per {what} in train mode, got {pop}"
        )));
    }
    Ok(())
}

/// Train-mode 2-D batch norm over (batch, height, width) per channel.
#[allow(clippy::too_many_arguments)]
pub fn batchnorm2d_forward_train(
    x: &Tensor4,
    gamma: &[f64],
    beta: &[f64],
    running_mean: &mut [f64],
    running_var: &mut [f64],
    momentum: f64,
    epsilon: f64,
) -> Result<(Tensor4, Bn2dCache)> {
    let (n, c, h, w) = x.shape();
    if gamma.len() != c || beta.len() != c || running_mean.len() != c || running_var.len() != c {
        return Err(Error::Shape("batch norm parameter length".into()));
    }
    let pop = n * h * w;
    check_population(pop, "channel")?;

    let mut out = Tensor4::zeros(x.shape());
    let mut x_hat = Tensor4::zeros(x.shape());
    let mut inv_std = vec![0.0; c];
    for ci in 0..c {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for ni in 0..n {
            for &v in x.plane(ni, ci) {
                sum += v;
                sum_sq += v * v;
            }
        }
        let mean = sum / pop as f64;
        let var = (sum_sq / pop as f64 - mean * mean).max(0.0);
        let istd = 1.0 / (var + epsilon).sqrt();
        inv_std[ci] = istd;

        running_mean[ci] = (1.0 - momentum) * running_mean[ci] + momentum * mean;
        let unbiased = var * pop as f64 / (pop as f64 - 1.0);
        running_var[ci] = (1.0 - momentum) * running_var[ci] + momentum * unbiased;

        for ni in 0..n {
            let src = x.plane(ni, ci).to_vec();
            let hat = x_hat.plane_mut(ni, ci);
            for (dst, &v) in hat.iter_mut().zip(&src) {
                *dst = (v - mean) * istd;
            }
            let hat = x_hat.plane(ni, ci).to_vec();
            let dst = out.plane_mut(ni, ci);
            for (o, &xh) in dst.iter_mut().zip(&hat) {
                *o = gamma[ci] * xh + beta[ci];
            }
        }
    }
    Ok((out, Bn2dCache { x_hat, inv_std }))
}

/// Eval-mode 2-D batch norm using running statistics.
pub fn batchnorm2d_forward_eval(
    x: &Tensor4,
    gamma: &[f64],
    beta: &[f64],
    running_mean: &[f64],
    running_var: &[f64],
    epsilon: f64,
) -> Result<Tensor4> {
    let (n, c, _, _) = x.shape();
    if gamma.len() != c {
        return Err(Error::Shape("batch norm parameter length".into()));
    }
    let mut out = Tensor4::zeros(x.shape());
    for ci in 0..c {
        let istd = 1.0 / (running_var[ci] + epsilon).sqrt();
        for ni in 0..n {
            let src = x.plane(ni, ci).to_vec();
            let dst = out.plane_mut(ni, ci);
            for (o, &v) in dst.iter_mut().zip(&src) {
                *o = gamma[ci] * (v - running_mean[ci]) * istd + beta[ci];
            }
        }
    }
    Ok(out)
}

/// Backward through the 2-D normalization, including batch statistics.
pub fn batchnorm2d_backward(
    cache: &Bn2dCache,
    gamma: &[f64],
    upstream: &Tensor4,
) -> (Tensor4, Vec<f64>, Vec<f64>) {
    let (n, c, h, w) = upstream.shape();
    let pop = (n * h * w) as f64;
    let mut dgamma = vec![0.0; c];
    let mut dbeta = vec![0.0; c];
    let mut dx = Tensor4::zeros(upstream.shape());
    for ci in 0..c {
        let mut sum_dy = 0.0;
        let mut sum_dy_xhat = 0.0;
        for ni in 0..n {
            for (&dy, &xh) in upstream.plane(ni, ci).iter().zip(cache.x_hat.plane(ni, ci)) {
                sum_dy += dy;
                sum_dy_xhat += dy * xh;
            }
        }
        dgamma[ci] = sum_dy_xhat;
        dbeta[ci] = sum_dy;
        let mean_dy = sum_dy / pop;
        let mean_dy_xhat = sum_dy_xhat / pop;
        let scale = gamma[ci] * cache.inv_std[ci];
        for ni in 0..n {
            let up = upstream.plane(ni, ci).to_vec();
            let hat = cache.x_hat.plane(ni, ci).to_vec();
            let dst = dx.plane_mut(ni, ci);
            for ((d, &dy), &xh) in dst.iter_mut().zip(&up).zip(&hat) {
                *d = scale * (dy - mean_dy - xh * mean_dy_xhat);
            }
        }
    }
    (dx, dgamma, dbeta)
}

/// Train-mode 1-D batch norm treating matrix columns as features.
#[allow(clippy::too_many_arguments)]
pub fn batchnorm1d_forward_train(
    x: &Mat,
    gamma: &[f64],
    beta: &[f64],
    running_mean: &mut [f64],
    running_var: &mut [f64],
    momentum: f64,
    epsilon: f64,
) -> Result<(Mat, Bn1dCache)> {
    let (n, f) = (x.rows(), x.cols());
    if gamma.len() != f || beta.len() != f || running_mean.len() != f || running_var.len() != f {
        return Err(Error::Shape("batch norm parameter length".into()));
    }
    check_population(n, "feature")?;

    let mut out = Mat::zeros(n, f);
    let mut x_hat = Mat::zeros(n, f);
    let mut inv_std = vec![0.0; f];
    for fi in 0..f {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for r in 0..n {
            let v = x.at(r, fi);
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean).max(0.0);
        let istd = 1.0 / (var + epsilon).sqrt();
        inv_std[fi] = istd;

        running_mean[fi] = (1.0 - momentum) * running_mean[fi] + momentum * mean;
        let unbiased = var * n as f64 / (n as f64 - 1.0);
        running_var[fi] = (1.0 - momentum) * running_var[fi] + momentum * unbiased;

        for r in 0..n {
            let xh = (x.at(r, fi) - mean) * istd;
            x_hat.row_mut(r)[fi] = xh;
            out.row_mut(r)[fi] = gamma[fi] * xh + beta[fi];
        }
    }
    Ok((out, Bn1dCache { x_hat, inv_std }))
}

/// Eval-mode 1-D batch norm using running statistics.
pub fn batchnorm1d_forward_eval(
    x: &Mat,
    gamma: &[f64],
    beta: &[f64],
    running_mean: &[f64],
    running_var: &[f64],
    epsilon: f64,
) -> Result<Mat> {
    let (n, f) = (x.rows(), x.cols());
    if gamma.len() != f {
        return Err(Error::Shape("batch norm parameter length".into()));
    }
    let mut out = Mat::zeros(n, f);
    for fi in 0..f {
        let istd = 1.0 / (running_var[fi] + epsilon).sqrt();
        for r in 0..n {
            out.row_mut(r)[fi] = gamma[fi] * (x.at(r, fi) - running_mean[fi]) * istd + beta[fi];
        }
    }
    Ok(out)
}

/// Backward through the 1-D normalization, including batch statistics.
pub fn batchnorm1d_backward(
    cache: &Bn1dCache,
    gamma: &[f64],
    upstream: &Mat,
) -> (Mat, Vec<f64>, Vec<f64>) {
    let (n, f) = (upstream.rows(), upstream.cols());
    let mut dgamma = vec![0.0; f];
    let mut dbeta = vec![0.0; f];
    let mut dx = Mat::zeros(n, f);
    for fi in 0..f {
        let mut sum_dy = 0.0;
        let mut sum_dy_xhat = 0.0;
        for r in 0..n {
            let dy = upstream.at(r, fi);
            sum_dy += dy;
            sum_dy_xhat += dy * cache.x_hat.at(r, fi);
        }
        dgamma[fi] = sum_dy_xhat;
        dbeta[fi] = sum_dy;
        let mean_dy = sum_dy / n as f64;
        let mean_dy_xhat = sum_dy_xhat / n as f64;
        let scale = gamma[fi] * cache.inv_std[fi];
        for r in 0..n {
            let dy = upstream.at(r, fi);
            let xh = cache.x_hat.at(r, fi);
            dx.row_mut(r)[fi] = scale * (dy - mean_dy - xh * mean_dy_xhat);
        }
    }
    (dx, dgamma, dbeta)
}
