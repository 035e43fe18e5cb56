//! Fingerprint dataset construction and persistence.
//!
//! Complex CSI matrices become real M x 2B tensors (real and imaginary
//! parts of each beam in two consecutive columns), get labeled by
//! reference-point class, and are split stratified into train/validation.
//! Test records carry ground-truth coordinates instead of labels. Sample
//! values and coordinates are stored in 32-bit floats, matching the file
//! format exactly, so a dataset round-trips through disk bit-for-bit.

mod generate;
mod io;
mod tensor;

pub use generate::{
    generate_reference_set, generate_reference_set_with, generate_test_set,
    generate_test_set_with, split,
};
pub use io::{load_dataset, save_dataset, DATASET_MAGIC, DATASET_VERSION};
pub use tensor::{from_real_tensor, to_real_tensor};

use ndarray::Array2;

/// One training/validation sample: packed CSI tensor plus its class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    /// M x 2B packed CSI values.
    pub values: Array2<f32>,
    /// Index into the reference map.
    pub class_id: u32,
}

/// One test sample: packed CSI tensor plus ground truth, no label.
#[derive(Debug, Clone, PartialEq)]
pub struct TestRecord {
    pub values: Array2<f32>,
    /// Index of the test point this sample was drawn at.
    pub point_id: u32,
    /// Draw index within the point.
    pub sample_idx: u32,
    /// Ground-truth coordinates in meters.
    pub true_position: (f32, f32),
}

/// Where a dataset came from: enough to re-derive and verify it.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetProvenance {
    /// SHA-256 of the scene file bytes.
    pub scene_hash: [u8; 32],
    /// SHA-256 of the resolved run configuration (zeros when unset).
    pub config_hash: [u8; 32],
    pub noise_seed: u64,
    pub split_seed: u64,
    /// Calibrated complex noise variance used for every sample.
    pub noise_power: f64,
    pub tx_gain: f64,
}

impl Default for DatasetProvenance {
    fn default() -> Self {
        Self {
            scene_hash: [0; 32],
            config_hash: [0; 32],
            noise_seed: 0,
            split_seed: 0,
            noise_power: 1.0,
            tx_gain: 1.0,
        }
    }
}

/// The full dataset an experiment trains and evaluates on.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintDataset {
    /// Subcarrier count M.
    pub n_subcarriers: usize,
    /// Beam count B (tensors have 2B columns).
    pub n_beams: usize,
    pub train: Vec<LabeledSample>,
    pub validation: Vec<LabeledSample>,
    pub test: Vec<TestRecord>,
    /// Class index -> reference point coordinates in meters.
    pub reference_map: Vec<(f32, f32)>,
    pub provenance: DatasetProvenance,
}

impl FingerprintDataset {
    pub fn n_classes(&self) -> usize {
        self.reference_map.len()
    }

    /// Check the structural invariants after construction or load.
    pub fn validate(&self) -> crate::Result<()> {
        let cols = 2 * self.n_beams;
        for s in self.train.iter().chain(self.validation.iter()) {
            if s.values.dim() != (self.n_subcarriers, cols) {
                return Err(crate::Error::Shape(format!(
                    "sample tensor {:?}, expected ({}, {})",
                    s.values.dim(),
                    self.n_subcarriers,
                    cols
                )));
            }
            if s.class_id as usize >= self.reference_map.len() {
                return Err(crate::Error::Config(format!(
                    "class id {} outside reference map of {}",
                    s.class_id,
                    self.reference_map.len()
                )));
            }
        }
        for t in &self.test {
            if t.values.dim() != (self.n_subcarriers, cols) {
                return Err(crate::Error::Shape("test tensor shape".into()));
            }
        }
        Ok(())
    }
}
