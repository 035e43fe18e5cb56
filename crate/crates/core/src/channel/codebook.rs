//! Fixed beam codebook over the array's forward hemisphere.

use super::array::{array_response, ArrayGeometry};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// A bank of `B` unit-norm steering weight vectors.
///
/// Beams tile a uniform angular grid over the forward hemisphere:
/// `n_az_beams` azimuth cells by `n_el_beams` elevation cells, each beam
/// pointing at its cell center. Beam `b` steers toward
/// `beam_grid[b] = (azimuth, elevation)` (global frame); its weight vector
/// is the conjugated array response at that angle scaled to unit L2 norm,
/// so a ray arriving exactly from the grid angle combines coherently.
#[derive(Debug, Clone)]
pub struct BeamCodebook {
    pub beams: Vec<Vec<Complex64>>,
    pub beam_grid: Vec<(f64, f64)>,
}

impl BeamCodebook {
    /// Number of beams B.
    pub fn n_beams(&self) -> usize {
        self.beams.len()
    }

    /// Element count each beam vector must match.
    pub fn n_elements(&self) -> usize {
        self.beams.first().map_or(0, Vec::len)
    }
}

/// Build the uniform-grid codebook for an array.
///
/// The forward hemisphere spans ±π/2 around boresight in both azimuth and
/// elevation; cell centers sit at offset `-π/2 + (i + 0.5)·π/n` for cell
/// `i`. Beams are ordered azimuth-major: `b = i_az · n_el_beams + i_el`.
pub fn build_codebook(
    array: &ArrayGeometry,
    n_az_beams: usize,
    n_el_beams: usize,
) -> Result<BeamCodebook> {
    if n_az_beams < 1 || n_el_beams < 1 {
        return Err(Error::Config("beam counts must be at least 1".into()));
    }
    let (az0, el0) = array.orientation;
    let n = array.n_elements() as f64;
    let norm = 1.0 / n.sqrt();

    let mut beams = Vec::with_capacity(n_az_beams * n_el_beams);
    let mut beam_grid = Vec::with_capacity(n_az_beams * n_el_beams);
    for i_az in 0..n_az_beams {
        let az = az0 - PI / 2.0 + (i_az as f64 + 0.5) * PI / n_az_beams as f64;
        for i_el in 0..n_el_beams {
            let el = el0 - PI / 2.0 + (i_el as f64 + 0.5) * PI / n_el_beams as f64;
            let weights: Vec<Complex64> = array_response(array, az, el)
                .into_iter()
                .map(|a| a.conj() * norm)
                .collect();
            beams.push(weights);
            beam_grid.push((az, el));
        }
    }
    Ok(BeamCodebook { beams, beam_grid })
}
