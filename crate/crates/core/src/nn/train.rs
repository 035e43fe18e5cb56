//! Seeded minibatch training with AdamW and best-checkpoint tracking.

use super::adamw::AdamWState;
use super::checkpoint::Checkpoint;
use super::loss::softmax_nll_batch;
use super::network::{Network, NetworkConfig};
use super::tensor::Tensor4;
use crate::dataset::LabeledSample;
use crate::error::{Error, Result};
use crate::seed::{self, tag};
use rand::seq::SliceRandom;

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub shuffle_seed: u64,
}

impl TrainConfig {
    /// Reference defaults: 150 epochs, batch 20, learning rate 1e-6,
    /// weight decay 1e-3.
    pub fn reference_defaults(shuffle_seed: u64) -> Self {
        Self {
            epochs: 150,
            batch_size: 20,
            learning_rate: 1e-6,
            weight_decay: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            shuffle_seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0)
            || self.weight_decay < 0.0
            || !(self.beta1 > 0.0 && self.beta1 < 1.0)
            || !(self.beta2 > 0.0 && self.beta2 < 1.0)
            || !(self.epsilon > 0.0)
        {
            return Err(Error::Config("invalid optimizer hyperparameters".into()));
        }
        Ok(())
    }
}

/// One epoch's scores, in the order they are reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

/// Borrowed training and validation splits.
#[derive(Debug, Clone, Copy)]
pub struct TrainData<'a> {
    pub train: &'a [LabeledSample],
    pub validation: &'a [LabeledSample],
    pub n_classes: usize,
}

impl TrainData<'_> {
    fn validate(&self) -> Result<()> {
        if self.train.is_empty() || self.validation.is_empty() {
            return Err(Error::Config("train and validation must be non-empty".into()));
        }
        Ok(())
    }
}

/// Called after each epoch with the epoch index and the current network.
pub type EpochHook<'a> = dyn FnMut(usize, &Network) + 'a;

/// Everything a training run produces.
pub struct TrainOutcome {
    pub history: Vec<EpochMetrics>,
    /// State at the epoch with the highest validation accuracy
    /// (ties resolve to the earlier epoch).
    pub best: Checkpoint,
    /// State after the final epoch.
    pub last: Checkpoint,
}

/// Assemble a batch tensor (widening f32 sample values to f64) and labels.
pub fn assemble_batch(samples: &[LabeledSample], indices: &[usize]) -> (Tensor4, Vec<u32>) {
    let (m, cols) = samples[indices[0]].values.dim();
    let mut data = Vec::with_capacity(indices.len() * m * cols);
    let mut labels = Vec::with_capacity(indices.len());
    for &i in indices {
        let s = &samples[i];
        data.extend(s.values.iter().map(|&v| v as f64));
        labels.push(s.class_id);
    }
    (
        Tensor4::from_vec((indices.len(), 1, m, cols), data),
        labels,
    )
}

/// Train a fresh network.
pub fn train(
    net_cfg: NetworkConfig,
    cfg: &TrainConfig,
    data: &TrainData,
    hook: Option<&mut EpochHook>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    data.validate()?;
    let net = Network::new(net_cfg)?;
    let opt = AdamWState::new(
        net.n_params(),
        cfg.learning_rate,
        cfg.weight_decay,
        cfg.beta1,
        cfg.beta2,
        cfg.epsilon,
    );
    run_epochs(net, opt, 0, Vec::new(), None, cfg, data, hook)
}

/// Continue a run from its last and best checkpoints. With identical data,
/// config, and seeds the continuation is bit-identical to an uninterrupted
/// run: shuffles derive from (seed, epoch), and the checkpoints carry the
/// optimizer moments and running statistics.
pub fn resume(
    last: &Checkpoint,
    best: &Checkpoint,
    cfg: &TrainConfig,
    data: &TrainData,
    hook: Option<&mut EpochHook>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    data.validate()?;
    if cfg.epochs < last.epoch {
        return Err(Error::Config(format!(
            "checkpoint already at epoch {}, config asks for {}",
            last.epoch, cfg.epochs
        )));
    }
    let net = last.to_network()?;
    let best_metrics = *best
        .history
        .last()
        .ok_or_else(|| Error::Config("best checkpoint has no history".into()))?;
    let best_state = BestState {
        val_acc: best_metrics.val_acc,
        val_loss: best_metrics.val_loss,
        net: best.to_network()?,
        opt: best.optimizer.clone(),
        epoch: best.epoch,
        history: best.history.clone(),
    };
    run_epochs(
        net,
        last.optimizer.clone(),
        last.epoch,
        last.history.clone(),
        Some(best_state),
        cfg,
        data,
        hook,
    )
}

struct BestState {
    val_acc: f64,
    val_loss: f64,
    net: Network,
    opt: AdamWState,
    epoch: usize,
    history: Vec<EpochMetrics>,
}

#[allow(clippy::too_many_arguments)]
fn run_epochs(
    mut net: Network,
    mut opt: AdamWState,
    start_epoch: usize,
    mut history: Vec<EpochMetrics>,
    mut best: Option<BestState>,
    cfg: &TrainConfig,
    data: &TrainData,
    mut hook: Option<&mut EpochHook>,
) -> Result<TrainOutcome> {
    for epoch in start_epoch..cfg.epochs {
        let mut order: Vec<usize> = (0..data.train.len()).collect();
        let mut rng = seed::rng(cfg.shuffle_seed, &[tag::SHUFFLE, epoch as u64]);
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        let mut seen = 0usize;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            // A trailing singleton cannot pass train-mode batch norm.
            if chunk.len() == 1 {
                continue;
            }
            let (input, labels) = assemble_batch(data.train, chunk);
            let (logits, cache) = net.forward_train(&input)?;
            let batch = softmax_nll_batch(&logits, &labels)?;
            if !batch.loss.is_finite() {
                let param_norm = net.params().iter().map(|p| p * p).sum::<f64>().sqrt();
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_idx,
                    loss: batch.loss,
                    param_norm,
                });
            }
            net.backward(&cache, &batch.logit_grads);
            let (params, grads) = net.params_and_grads();
            opt.step(params, grads);

            loss_sum += batch.loss * chunk.len() as f64;
            correct += batch.correct;
            seen += chunk.len();
        }

        let (val_loss, val_acc) = evaluate_split(&net, data.validation, cfg.batch_size)?;
        let metrics = EpochMetrics {
            epoch,
            train_loss: loss_sum / seen as f64,
            train_acc: correct as f64 / seen as f64,
            val_loss,
            val_acc,
        };
        history.push(metrics);

        // Highest validation accuracy wins; accuracy ties go to the lower
        // validation loss, and full ties keep the earlier epoch.
        let improved = best.as_ref().map_or(true, |b| {
            val_acc > b.val_acc || (val_acc == b.val_acc && val_loss < b.val_loss)
        });
        if improved {
            best = Some(BestState {
                val_acc,
                val_loss,
                net: net.clone(),
                opt: opt.clone(),
                epoch: epoch + 1,
                history: history.clone(),
            });
        }
        if let Some(h) = hook.as_deref_mut() {
            h(epoch, &net);
        }
    }

    let best = best.ok_or_else(|| Error::Config("no epochs were run".into()))?;
    let best_ckpt = Checkpoint::from_state(&best.net, &best.opt, best.epoch, best.history);
    let last_ckpt = Checkpoint::from_state(&net, &opt, cfg.epochs, history);
    Ok(TrainOutcome {
        history: last_ckpt.history.clone(),
        best: best_ckpt,
        last: last_ckpt,
    })
}

/// Mean loss and accuracy of a labeled split in eval mode.
pub fn evaluate_split(
    net: &Network,
    samples: &[LabeledSample],
    batch_size: usize,
) -> Result<(f64, f64)> {
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    let indices: Vec<usize> = (0..samples.len()).collect();
    for chunk in indices.chunks(batch_size) {
        let (input, labels) = assemble_batch(samples, chunk);
        let logits = net.forward_eval(&input)?;
        let batch = softmax_nll_batch(&logits, &labels)?;
        loss_sum += batch.loss * chunk.len() as f64;
        correct += batch.correct;
    }
    Ok((
        loss_sum / samples.len() as f64,
        correct as f64 / samples.len() as f64,
    ))
}

#[cfg(test)]
mod tests {
    use super::super::network::test_configs::tiny;
    use super::*;
    use ndarray::Array2;

    /// Separable two-class toy set: class patterns far apart relative to
    /// the perturbation scale.
    fn toy_data(n_per_class: usize, stream: u64) -> Vec<LabeledSample> {
        let mut out = Vec::new();
        for class in 0..2u32 {
            for k in 0..n_per_class {
                let mut rng = seed::rng(stream, &[class as u64, k as u64]);
                use rand::Rng;
                let values = Array2::from_shape_fn((12, 8), |(r, c)| {
                    let base = if class == 0 {
                        (r as f32 / 12.0) - 0.5
                    } else {
                        0.5 - (c as f32 / 8.0)
                    };
                    base + rng.gen::<f32>() * 0.05
                });
                out.push(LabeledSample {
                    values,
                    class_id: class,
                });
            }
        }
        out
    }

    fn quick_config(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 8,
            learning_rate: 3e-3,
            weight_decay: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            shuffle_seed: 5,
        }
    }

    #[test]
    fn separable_toy_reaches_full_validation_accuracy() {
        let samples = toy_data(24, 81);
        let (train, val) = crate::dataset::split(&samples, 0.5, 4).unwrap();
        let data = TrainData {
            train: &train,
            validation: &val,
            n_classes: 2,
        };
        let out = train_helper(&data, 30);
        let final_acc = out.history.last().unwrap().val_acc;
        assert_eq!(final_acc, 1.0, "history: {:?}", out.history.last());
    }

    fn train_helper(data: &TrainData, epochs: usize) -> TrainOutcome {
        train(tiny(7), &quick_config(epochs), data, None).unwrap()
    }

    #[test]
    fn identical_seeds_give_identical_histories() {
        let samples = toy_data(12, 82);
        let (train_s, val) = crate::dataset::split(&samples, 0.5, 4).unwrap();
        let data = TrainData {
            train: &train_s,
            validation: &val,
            n_classes: 2,
        };
        let a = train_helper(&data, 4);
        let b = train_helper(&data, 4);
        assert_eq!(a.history, b.history);
        assert_eq!(a.last.params, b.last.params);
        assert_eq!(a.last.optimizer, b.last.optimizer);
    }

    #[test]
    fn resume_matches_uninterrupted_run_bitwise() {
        let samples = toy_data(12, 83);
        let (train_s, val) = crate::dataset::split(&samples, 0.5, 4).unwrap();
        let data = TrainData {
            train: &train_s,
            validation: &val,
            n_classes: 2,
        };
        let full = train_helper(&data, 6);

        let partial = train_helper(&data, 3);
        let resumed = resume(
            &partial.last,
            &partial.best,
            &quick_config(6),
            &data,
            None,
        )
        .unwrap();

        assert_eq!(full.history, resumed.history);
        assert_eq!(full.last, resumed.last);
        assert_eq!(full.best, resumed.best);
    }

    #[test]
    fn best_checkpoint_tracks_max_validation_accuracy() {
        let samples = toy_data(16, 84);
        let (train_s, val) = crate::dataset::split(&samples, 0.5, 4).unwrap();
        let data = TrainData {
            train: &train_s,
            validation: &val,
            n_classes: 2,
        };
        let out = train_helper(&data, 8);
        let best_acc = out
            .history
            .iter()
            .map(|m| m.val_acc)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(out.best.history.last().unwrap().val_acc, best_acc);
        // Among the max-accuracy epochs the lowest validation loss wins,
        // earliest on full ties.
        let want = out
            .history
            .iter()
            .filter(|m| m.val_acc == best_acc)
            .min_by(|a, b| a.val_loss.total_cmp(&b.val_loss))
            .unwrap()
            .epoch;
        assert_eq!(out.best.epoch, want + 1);
    }

    #[test]
    fn empty_split_is_rejected() {
        let samples = toy_data(4, 85);
        let data = TrainData {
            train: &samples,
            validation: &[],
            n_classes: 2,
        };
        assert!(train(tiny(7), &quick_config(1), &data, None).is_err());
    }
}
