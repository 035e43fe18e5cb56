//! Versioned binary checkpoint file.
//!
//! Layout (little-endian; section envelope per [`crate::wire`]):
//!
//! ```text
//! magic    "BFPC"
//! version  u32 = 1
//! CONF     input c,h,w u32×3; n_classes u32; bn_epsilon f64;
//!          bn_momentum f64; init_seed u64;
//!          5 × conv (out,kh,kw,sh,sw,ph,pw u32×7);
//!          4 × pool (wh,ww,sh,sw u32×4)
//! PROV     config_hash 32 bytes, dataset_hash 32 bytes
//! PARM     count u64, parameters f64×count
//! RUNS     c u64, input mean f64×c, input var f64×c,
//!          f u64, feature mean f64×f, feature var f64×f
//! OPTM     lr f64, wd f64, beta1 f64, beta2 f64, eps f64,
//!          t u64, m f64×count, v f64×count
//! HIST     epoch u64, entries u64,
//!          entries × (epoch u64, train_loss, train_acc,
//!                     val_loss, val_acc f64×4)
//! ```

use super::adamw::AdamWState;
use super::network::{ConvStage, Network, NetworkConfig, PoolStage};
use super::train::EpochMetrics;
use crate::error::Result;
use crate::wire::{self, Decoder, Encoder};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"BFPC";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A complete, self-describing training snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: NetworkConfig,
    pub params: Vec<f64>,
    pub bn_in_mean: Vec<f64>,
    pub bn_in_var: Vec<f64>,
    pub bn_feat_mean: Vec<f64>,
    pub bn_feat_var: Vec<f64>,
    pub optimizer: AdamWState,
    /// Completed epochs.
    pub epoch: usize,
    pub history: Vec<EpochMetrics>,
    /// SHA-256 of the resolved run configuration (zeros when unset).
    pub config_hash: [u8; 32],
    /// SHA-256 of the dataset file bytes (zeros when unset).
    pub dataset_hash: [u8; 32],
}

impl Checkpoint {
    pub fn from_state(
        net: &Network,
        opt: &AdamWState,
        epoch: usize,
        history: Vec<EpochMetrics>,
    ) -> Self {
        let (im, iv, fm, fv) = net.running_stats();
        Self {
            config: net.config().clone(),
            params: net.params().to_vec(),
            bn_in_mean: im.to_vec(),
            bn_in_var: iv.to_vec(),
            bn_feat_mean: fm.to_vec(),
            bn_feat_var: fv.to_vec(),
            optimizer: opt.clone(),
            epoch,
            history,
            config_hash: [0; 32],
            dataset_hash: [0; 32],
        }
    }

    /// Rebuild the network; fails with a shape error if the stored
    /// parameters do not fit the stored (or edited) configuration.
    pub fn to_network(&self) -> Result<Network> {
        Network::from_parts(
            self.config.clone(),
            self.params.clone(),
            self.bn_in_mean.clone(),
            self.bn_in_var.clone(),
            self.bn_feat_mean.clone(),
            self.bn_feat_var.clone(),
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        wire::write_magic(&mut w, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)?;

        let mut conf = Encoder::new();
        conf.put_u32(self.config.input.0 as u32);
        conf.put_u32(self.config.input.1 as u32);
        conf.put_u32(self.config.input.2 as u32);
        conf.put_u32(self.config.n_classes as u32);
        conf.put_f64(self.config.bn_epsilon);
        conf.put_f64(self.config.bn_momentum);
        conf.put_u64(self.config.init_seed);
        for c in &self.config.convs {
            conf.put_u32(c.out_channels as u32);
            conf.put_u32(c.kernel.0 as u32);
            conf.put_u32(c.kernel.1 as u32);
            conf.put_u32(c.stride.0 as u32);
            conf.put_u32(c.stride.1 as u32);
            conf.put_u32(c.padding.0 as u32);
            conf.put_u32(c.padding.1 as u32);
        }
        for p in &self.config.pools {
            conf.put_u32(p.window.0 as u32);
            conf.put_u32(p.window.1 as u32);
            conf.put_u32(p.stride.0 as u32);
            conf.put_u32(p.stride.1 as u32);
        }
        wire::write_section(&mut w, b"CONF", &conf.into_bytes())?;

        let mut prov = Encoder::new();
        prov.put_bytes(&self.config_hash);
        prov.put_bytes(&self.dataset_hash);
        wire::write_section(&mut w, b"PROV", &prov.into_bytes())?;

        let mut parm = Encoder::new();
        parm.put_u64(self.params.len() as u64);
        parm.put_f64_slice(&self.params);
        wire::write_section(&mut w, b"PARM", &parm.into_bytes())?;

        let mut runs = Encoder::new();
        runs.put_u64(self.bn_in_mean.len() as u64);
        runs.put_f64_slice(&self.bn_in_mean);
        runs.put_f64_slice(&self.bn_in_var);
        runs.put_u64(self.bn_feat_mean.len() as u64);
        runs.put_f64_slice(&self.bn_feat_mean);
        runs.put_f64_slice(&self.bn_feat_var);
        wire::write_section(&mut w, b"RUNS", &runs.into_bytes())?;

        let mut optm = Encoder::new();
        optm.put_f64(self.optimizer.learning_rate);
        optm.put_f64(self.optimizer.weight_decay);
        optm.put_f64(self.optimizer.beta1);
        optm.put_f64(self.optimizer.beta2);
        optm.put_f64(self.optimizer.epsilon);
        optm.put_u64(self.optimizer.t);
        optm.put_f64_slice(&self.optimizer.m);
        optm.put_f64_slice(&self.optimizer.v);
        wire::write_section(&mut w, b"OPTM", &optm.into_bytes())?;

        let mut hist = Encoder::new();
        hist.put_u64(self.epoch as u64);
        hist.put_u64(self.history.len() as u64);
        for m in &self.history {
            hist.put_u64(m.epoch as u64);
            hist.put_f64(m.train_loss);
            hist.put_f64(m.train_acc);
            hist.put_f64(m.val_loss);
            hist.put_f64(m.val_acc);
        }
        wire::write_section(&mut w, b"HIST", &hist.into_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        wire::read_magic(&mut r, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)?;

        let conf_bytes = wire::read_section(&mut r, b"CONF")?;
        let mut conf = Decoder::new(&conf_bytes, "CONF");
        let input = (
            conf.get_u32()? as usize,
            conf.get_u32()? as usize,
            conf.get_u32()? as usize,
        );
        let n_classes = conf.get_u32()? as usize;
        let bn_epsilon = conf.get_f64()?;
        let bn_momentum = conf.get_f64()?;
        let init_seed = conf.get_u64()?;
        let mut convs = Vec::with_capacity(5);
        for _ in 0..5 {
            convs.push(ConvStage {
                out_channels: conf.get_u32()? as usize,
                kernel: (conf.get_u32()? as usize, conf.get_u32()? as usize),
                stride: (conf.get_u32()? as usize, conf.get_u32()? as usize),
                padding: (conf.get_u32()? as usize, conf.get_u32()? as usize),
            });
        }
        let mut pools = Vec::with_capacity(4);
        for _ in 0..4 {
            pools.push(PoolStage {
                window: (conf.get_u32()? as usize, conf.get_u32()? as usize),
                stride: (conf.get_u32()? as usize, conf.get_u32()? as usize),
            });
        }
        let config = NetworkConfig {
            input,
            convs,
            pools,
            n_classes,
            bn_epsilon,
            bn_momentum,
            init_seed,
        };

        let prov_bytes = wire::read_section(&mut r, b"PROV")?;
        let mut prov = Decoder::new(&prov_bytes, "PROV");
        let config_hash: [u8; 32] = prov.get_bytes(32)?.try_into().unwrap();
        let dataset_hash: [u8; 32] = prov.get_bytes(32)?.try_into().unwrap();

        let parm_bytes = wire::read_section(&mut r, b"PARM")?;
        let mut parm = Decoder::new(&parm_bytes, "PARM");
        let count = parm.get_u64()? as usize;
        let params = parm.get_f64_vec(count)?;

        let runs_bytes = wire::read_section(&mut r, b"RUNS")?;
        let mut runs = Decoder::new(&runs_bytes, "RUNS");
        let c = runs.get_u64()? as usize;
        let bn_in_mean = runs.get_f64_vec(c)?;
        let bn_in_var = runs.get_f64_vec(c)?;
        let f = runs.get_u64()? as usize;
        let bn_feat_mean = runs.get_f64_vec(f)?;
        let bn_feat_var = runs.get_f64_vec(f)?;

        let optm_bytes = wire::read_section(&mut r, b"OPTM")?;
        let mut optm = Decoder::new(&optm_bytes, "OPTM");
        let mut optimizer = AdamWState::new(
            0,
            optm.get_f64()?,
            optm.get_f64()?,
            optm.get_f64()?,
            optm.get_f64()?,
            optm.get_f64()?,
        );
        optimizer.t = optm.get_u64()?;
        optimizer.m = optm.get_f64_vec(count)?;
        optimizer.v = optm.get_f64_vec(count)?;

        let hist_bytes = wire::read_section(&mut r, b"HIST")?;
        let mut hist = Decoder::new(&hist_bytes, "HIST");
        let epoch = hist.get_u64()? as usize;
        let n_entries = hist.get_u64()? as usize;
        let mut history = Vec::with_capacity(n_entries);
        for _ in 0..n_entries {
            history.push(EpochMetrics {
                epoch: hist.get_u64()? as usize,
                train_loss: hist.get_f64()?,
                train_acc: hist.get_f64()?,
                val_loss: hist.get_f64()?,
                val_acc: hist.get_f64()?,
            });
        }

        let ckpt = Self {
            config,
            params,
            bn_in_mean,
            bn_in_var,
            bn_feat_mean,
            bn_feat_var,
            optimizer,
            epoch,
            history,
            config_hash,
            dataset_hash,
        };
        // Surface parameter/config disagreement as a shape error now.
        ckpt.to_network()?;
        Ok(ckpt)
    }
}

#[cfg(test)]
mod tests {
    use super::super::network::test_configs::tiny;
    use super::*;
    use crate::error::Error;
    use crate::nn::tensor::Tensor4;
    use crate::seed;
    use rand::Rng;

    fn sample_checkpoint() -> Checkpoint {
        let mut net = Network::new(tiny(31)).unwrap();
        let mut rng = seed::rng(32, &[]);
        for p in net.params_mut() {
            *p = rng.gen::<f64>() - 0.5;
        }
        let mut opt = AdamWState::new(net.n_params(), 1e-3, 1e-2, 0.9, 0.999, 1e-8);
        opt.t = 17;
        for v in &mut opt.m {
            *v = rng.gen::<f64>() - 0.5;
        }
        for v in &mut opt.v {
            *v = rng.gen::<f64>();
        }
        let history = vec![
            EpochMetrics {
                epoch: 0,
                train_loss: 0.9,
                train_acc: 0.5,
                val_loss: 0.8,
                val_acc: 0.6,
            },
            EpochMetrics {
                epoch: 1,
                train_loss: 0.5,
                train_acc: 0.8,
                val_loss: 0.4,
                val_acc: 0.9,
            },
        ];
        let mut ckpt = Checkpoint::from_state(&net, &opt, 2, history);
        ckpt.config_hash = [3; 32];
        ckpt.dataset_hash = [4; 32];
        ckpt
    }

    #[test]
    fn save_load_round_trip_is_bitwise() {
        let ckpt = sample_checkpoint();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        ckpt.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(ckpt, back);
    }

    #[test]
    fn reloaded_network_emits_identical_logits() {
        let ckpt = sample_checkpoint();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        ckpt.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();

        let mut rng = seed::rng(33, &[]);
        let x = Tensor4::from_vec(
            (2, 1, 12, 8),
            (0..192).map(|_| rng.gen::<f64>() - 0.5).collect(),
        );
        let a = ckpt.to_network().unwrap().forward_eval(&x).unwrap();
        let b = back.to_network().unwrap().forward_eval(&x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mismatched_config_is_a_shape_error() {
        let mut ckpt = sample_checkpoint();
        ckpt.config.n_classes = 5;
        assert!(matches!(ckpt.to_network(), Err(Error::Shape(_))));
    }

    #[test]
    fn corruption_is_distinct_from_version_mismatch() {
        let ckpt = sample_checkpoint();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        ckpt.save(&path).unwrap();

        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x01;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            Checkpoint::load(&path),
            Err(Error::ChecksumMismatch(_))
        ));

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 9;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            Checkpoint::load(&path),
            Err(Error::FormatVersion { found: 9, .. })
        ));
    }
}
