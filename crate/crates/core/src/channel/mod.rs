//! Geometric mmWave channel simulation.
//!
//! Replaces a proprietary ray tracer with a documented model: a
//! line-of-sight ray plus one single-bounce specular reflection per
//! building wall whose mirror-image construction yields an unobstructed
//! two-segment route. Paths feed an OFDM frequency response sampled over
//! `M` subcarriers and combined through a `B`-beam codebook, giving the
//! effective beamformed CSI observed at a user location.

mod array;
mod codebook;
mod csi;
mod scene;
mod trace;

pub use array::{array_response, ArrayGeometry};
pub use codebook::{build_codebook, BeamCodebook};
pub use csi::{
    add_noise, beamformed_csi, best_beam_snr, calibrate_noise, snr_per_beam, CsiMatrix,
    LinkBudget, CALIBRATION_RANGE_M, CALIBRATION_SNR_DB,
};
pub use scene::{Building, Scene};
pub use trace::{trace_paths, Path, PathSet};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[cfg(test)]
pub(crate) mod test_support {
    pub use super::scene::test_scenes::*;
}
