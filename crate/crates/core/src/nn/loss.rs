//! Softmax and negative log-likelihood loss.

use super::tensor::Mat;
use crate::error::{Error, Result};

/// Max-shifted softmax: strictly positive, sums to one, overflow-safe.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

/// NLL of one probability vector: `-log p_true` and its logit gradient
/// `p - onehot(true)` through the softmax.
pub fn nll_loss(probs: &[f64], true_class: usize) -> Result<(f64, Vec<f64>)> {
    if true_class >= probs.len() {
        return Err(Error::Config(format!(
            "class {true_class} out of range for {} classes",
            probs.len()
        )));
    }
    let loss = -probs[true_class].ln();
    let mut grad = probs.to_vec();
    grad[true_class] -= 1.0;
    Ok((loss, grad))
}

/// Batch statistics of the softmax + NLL composition.
pub struct BatchLoss {
    /// Mean NLL over the batch.
    pub loss: f64,
    /// Logit gradients of the mean loss: `(p - onehot) / batch`.
    pub logit_grads: Mat,
    /// Rows whose argmax (ties to the lower index) equals the label.
    pub correct: usize,
}

/// Evaluate mean NLL, accuracy, and logit gradients for a logits batch.
pub fn softmax_nll_batch(logits: &Mat, labels: &[u32]) -> Result<BatchLoss> {
    if logits.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} logit rows for {} labels",
            logits.rows(),
            labels.len()
        )));
    }
    let n = logits.rows();
    let mut grads = Mat::zeros(n, logits.cols());
    let mut total = 0.0;
    let mut correct = 0;
    for r in 0..n {
        let probs = softmax(logits.row(r));
        let label = labels[r] as usize;
        let (loss, grad) = nll_loss(&probs, label)?;
        total += loss;
        let argmax = probs
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |best, (i, &p)| {
                if p > best.1 {
                    (i, p)
                } else {
                    best
                }
            })
            .0;
        if argmax == label {
            correct += 1;
        }
        for (g, v) in grads.row_mut(r).iter_mut().zip(grad) {
            *g = v / n as f64;
        }
    }
    Ok(BatchLoss {
        loss: total / n as f64,
        logit_grads: grads,
        correct,
    })
}
