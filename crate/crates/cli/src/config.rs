//! Run configuration: one TOML file drives every pipeline stage.
//!
//! ```toml
//! [run]
//! output_dir = "runs/desk"            # artifacts land here
//!
//! [scene]
//! file = "runs/desk/scene.toml"       # written by `scene`, read later
//! bs_position = [-30.0, 10.0, 10.0]   # m
//! n_azimuth = 16                      # array elements
//! n_elevation = 8
//! element_spacing = 0.5               # wavelengths (default 0.5)
//! boresight_azimuth_deg = 0.0         # default 0
//! boresight_elevation_deg = 0.0       # default 0
//! carrier_frequency_hz = 30.0e9
//! subcarrier_spacing_hz = 60.0e3
//! n_subcarriers = 60                  # M
//! tx_gain = 1.0                       # default 1
//! rng_seed = 7
//! grid_origin = [0.0, 0.0]            # reference points on a grid,
//! grid_rows = 3                       # class id = row*cols + col
//! grid_cols = 4
//! grid_spacing_m = 10.0
//! test_points = [[22.0, 6.5]]         # m
//! buildings = [ { min = [12.0, 4.0], max = [18.0, 9.0], height = 15.0 } ]
//!
//! [dataset]
//! file = "runs/desk/dataset.bin"
//! n_az_beams = 8                      # B = n_az_beams * n_el_beams
//! n_el_beams = 2
//! samples_per_reference = 200
//! samples_per_test = 50
//! train_fraction = 0.6
//! noise_seed = 11
//! split_seed = 13
//!
//! [network]
//! conv_channels = [8, 16, 32, 64, 64] # default shown
//! kernel = [3, 3]                     # default
//! padding = [1, 1]                    # default
//! conv_stride = [1, 1]                # default
//! pool_window = [2, 2]                # default
//! pool_stride = [2, 2]                # default
//! bn_epsilon = 1e-5                   # default
//! bn_momentum = 0.1                   # default
//! init_seed = 17
//!
//! [train]
//! epochs = 35
//! batch_size = 20
//! learning_rate = 3e-4
//! weight_decay = 1e-3
//! beta1 = 0.9                         # default
//! beta2 = 0.999                       # default
//! epsilon = 1e-8                      # default
//! shuffle_seed = 19
//! track_test_error = true             # default; per-epoch test error file
//!
//! [positioning]
//! top_r = 4                           # default
//! ```
//!
//! Every seed is explicit; nothing draws from system entropy. The SHA-256
//! of the canonical serialization of the *effective* configuration (after
//! command-line overrides) is embedded in every artifact and checked by
//! `beamfp verify`.

use beamfp::channel::{ArrayGeometry, Building, Scene};
use beamfp::nn::{ConvStage, NetworkConfig, PoolStage, TrainConfig};
use beamfp::{wire, Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub run: RunSection,
    pub scene: SceneSection,
    pub dataset: DatasetSection,
    pub network: NetworkSection,
    pub train: TrainSection,
    #[serde(default)]
    pub positioning: PositioningSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSection {
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSection {
    pub file: PathBuf,
    pub bs_position: [f64; 3],
    pub n_azimuth: usize,
    pub n_elevation: usize,
    #[serde(default = "d_spacing")]
    pub element_spacing: f64,
    #[serde(default)]
    pub boresight_azimuth_deg: f64,
    #[serde(default)]
    pub boresight_elevation_deg: f64,
    pub carrier_frequency_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub n_subcarriers: usize,
    #[serde(default = "d_one")]
    pub tx_gain: f64,
    pub rng_seed: u64,
    pub grid_origin: [f64; 2],
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub grid_spacing_m: f64,
    pub test_points: Vec<[f64; 2]>,
    #[serde(default)]
    pub buildings: Vec<BuildingSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildingSection {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub height: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSection {
    pub file: PathBuf,
    pub n_az_beams: usize,
    pub n_el_beams: usize,
    pub samples_per_reference: usize,
    pub samples_per_test: usize,
    pub train_fraction: f64,
    pub noise_seed: u64,
    pub split_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkSection {
    #[serde(default = "d_channels")]
    pub conv_channels: [usize; 5],
    #[serde(default = "d_3x3")]
    pub kernel: [usize; 2],
    #[serde(default = "d_1x1")]
    pub padding: [usize; 2],
    #[serde(default = "d_1x1")]
    pub conv_stride: [usize; 2],
    #[serde(default = "d_2x2")]
    pub pool_window: [usize; 2],
    #[serde(default = "d_2x2")]
    pub pool_stride: [usize; 2],
    #[serde(default = "d_bn_eps")]
    pub bn_epsilon: f64,
    #[serde(default = "d_bn_momentum")]
    pub bn_momentum: f64,
    pub init_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    #[serde(default = "d_beta1")]
    pub beta1: f64,
    #[serde(default = "d_beta2")]
    pub beta2: f64,
    #[serde(default = "d_adam_eps")]
    pub epsilon: f64,
    pub shuffle_seed: u64,
    #[serde(default = "d_true")]
    pub track_test_error: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositioningSection {
    #[serde(default = "d_top_r")]
    pub top_r: usize,
}

impl Default for PositioningSection {
    fn default() -> Self {
        Self { top_r: d_top_r() }
    }
}

fn d_spacing() -> f64 {
    0.5
}
fn d_one() -> f64 {
    1.0
}
fn d_channels() -> [usize; 5] {
    [8, 16, 32, 64, 64]
}
fn d_3x3() -> [usize; 2] {
    [3, 3]
}
fn d_1x1() -> [usize; 2] {
    [1, 1]
}
fn d_2x2() -> [usize; 2] {
    [2, 2]
}
fn d_bn_eps() -> f64 {
    1e-5
}
fn d_bn_momentum() -> f64 {
    0.1
}
fn d_beta1() -> f64 {
    0.9
}
fn d_beta2() -> f64 {
    0.999
}
fn d_adam_eps() -> f64 {
    1e-8
}
fn d_true() -> bool {
    true
}
fn d_top_r() -> usize {
    4
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    /// Canonical serialization of the effective configuration.
    pub fn canonical(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("config encode: {e}")))
    }

    /// SHA-256 over the canonical serialization.
    pub fn hash(&self) -> Result<[u8; 32]> {
        Ok(wire::sha256(self.canonical()?.as_bytes()))
    }

    /// Realize the scene model: grid reference points (row-major, class id
    /// = row · cols + col), explicit test points, and buildings.
    pub fn build_scene(&self) -> Result<Scene> {
        let s = &self.scene;
        let mut reference_points = Vec::with_capacity(s.grid_rows * s.grid_cols);
        for row in 0..s.grid_rows {
            for col in 0..s.grid_cols {
                reference_points.push((
                    s.grid_origin[0] + col as f64 * s.grid_spacing_m,
                    s.grid_origin[1] + row as f64 * s.grid_spacing_m,
                ));
            }
        }
        let scene = Scene {
            bs_position: (s.bs_position[0], s.bs_position[1], s.bs_position[2]),
            array: ArrayGeometry::new(
                s.n_azimuth,
                s.n_elevation,
                s.element_spacing,
                (
                    s.boresight_azimuth_deg.to_radians(),
                    s.boresight_elevation_deg.to_radians(),
                ),
            )?,
            carrier_frequency: s.carrier_frequency_hz,
            subcarrier_spacing: s.subcarrier_spacing_hz,
            n_subcarriers: s.n_subcarriers,
            tx_gain: s.tx_gain,
            buildings: s
                .buildings
                .iter()
                .map(|b| Building {
                    min: (b.min[0], b.min[1]),
                    max: (b.max[0], b.max[1]),
                    height: b.height,
                })
                .collect(),
            reference_points,
            test_points: s.test_points.iter().map(|p| (p[0], p[1])).collect(),
            rng_seed: s.rng_seed,
            config_hash: None,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Network configuration for a dataset with `m` subcarriers, `b` beams,
    /// and `n_classes` reference points.
    pub fn network_config(&self, m: usize, b: usize, n_classes: usize) -> NetworkConfig {
        let n = &self.network;
        NetworkConfig {
            input: (1, m, 2 * b),
            convs: n
                .conv_channels
                .iter()
                .map(|&out_channels| ConvStage {
                    out_channels,
                    kernel: (n.kernel[0], n.kernel[1]),
                    stride: (n.conv_stride[0], n.conv_stride[1]),
                    padding: (n.padding[0], n.padding[1]),
                })
                .collect(),
            pools: (0..4)
                .map(|_| PoolStage {
                    window: (n.pool_window[0], n.pool_window[1]),
                    stride: (n.pool_stride[0], n.pool_stride[1]),
                })
                .collect(),
            n_classes,
            bn_epsilon: n.bn_epsilon,
            bn_momentum: n.bn_momentum,
            init_seed: n.init_seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            weight_decay: t.weight_decay,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            shuffle_seed: t.shuffle_seed,
        }
    }

    pub fn best_checkpoint_path(&self) -> PathBuf {
        self.run.output_dir.join("checkpoint_best.bin")
    }

    pub fn last_checkpoint_path(&self) -> PathBuf {
        self.run.output_dir.join("checkpoint_last.bin")
    }

    pub fn metrics_path(&self) -> PathBuf {
        self.run.output_dir.join("metrics.csv")
    }

    pub fn test_error_path(&self) -> PathBuf {
        self.run.output_dir.join("test_error.csv")
    }

    pub fn report_path(&self) -> PathBuf {
        self.run.output_dir.join("report.csv")
    }

    pub fn summary_path(&self) -> PathBuf {
        self.run.output_dir.join("summary.txt")
    }

    pub fn sweep_path(&self) -> PathBuf {
        self.run.output_dir.join("r_sweep.csv")
    }
}
