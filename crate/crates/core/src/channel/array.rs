//! Uniform rectangular array geometry and steering response.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Uniform rectangular transmit array.
///
/// Elements sit on a regular grid: `n_azimuth` columns along the horizontal
/// array axis and `n_elevation` rows along the vertical axis, spaced
/// `element_spacing` wavelengths apart. `orientation` gives the boresight
/// direction as (azimuth, elevation) in radians in the global frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub n_azimuth: usize,
    pub n_elevation: usize,
    pub element_spacing: f64,
    pub orientation: (f64, f64),
}

impl ArrayGeometry {
    pub fn new(
        n_azimuth: usize,
        n_elevation: usize,
        element_spacing: f64,
        orientation: (f64, f64),
    ) -> Result<Self> {
        if n_azimuth < 1 || n_elevation < 1 {
            return Err(Error::Config(
                "array needs at least one element per axis".into(),
            ));
        }
        if !(element_spacing > 0.0) {
            return Err(Error::Config("element spacing must be positive".into()));
        }
        Ok(Self {
            n_azimuth,
            n_elevation,
            element_spacing,
            orientation,
        })
    }

    /// Total transmit element count.
    pub fn n_elements(&self) -> usize {
        self.n_azimuth * self.n_elevation
    }

    /// Unit vectors of the array frame: (boresight, azimuth axis, elevation axis).
    pub(crate) fn frame(&self) -> ([f64; 3], [f64; 3], [f64; 3]) {
        let (az0, el0) = self.orientation;
        let boresight = [
            el0.cos() * az0.cos(),
            el0.cos() * az0.sin(),
            el0.sin(),
        ];
        // Horizontal axis along which azimuth elements are laid out.
        let az_axis = [-az0.sin(), az0.cos(), 0.0];
        // Completes the right-handed frame; reduces to +z for zero tilt.
        let el_axis = [
            -el0.sin() * az0.cos(),
            -el0.sin() * az0.sin(),
            el0.cos(),
        ];
        (boresight, az_axis, el_axis)
    }

    /// Direction cosines (u, v) of a global-frame direction relative to boresight.
    pub(crate) fn direction_cosines(&self, azimuth: f64, elevation: f64) -> (f64, f64) {
        let k = [
            elevation.cos() * azimuth.cos(),
            elevation.cos() * azimuth.sin(),
            elevation.sin(),
        ];
        let (_, az_axis, el_axis) = self.frame();
        let u = k[0] * az_axis[0] + k[1] * az_axis[1] + k[2] * az_axis[2];
        let v = k[0] * el_axis[0] + k[1] * el_axis[1] + k[2] * el_axis[2];
        (u, v)
    }
}

/// Steering response of the array toward a global-frame direction.
///
/// Element (p, q) — column p along the azimuth axis, row q along the
/// elevation axis — has unit magnitude and phase
/// `2π · spacing · (p·u + q·v)` with (u, v) the direction cosines of the
/// requested direction onto the array axes. Boresight gives the all-ones
/// vector. Elements are ordered q-major: index = q · n_azimuth + p.
pub fn array_response(array: &ArrayGeometry, azimuth: f64, elevation: f64) -> Vec<Complex64> {
    let (u, v) = array.direction_cosines(azimuth, elevation);
    let step = TAU * array.element_spacing;
    let mut out = Vec::with_capacity(array.n_elements());
    for q in 0..array.n_elevation {
        for p in 0..array.n_azimuth {
            let phase = step * (p as f64 * u + q as f64 * v);
            out.push(Complex64::from_polar(1.0, phase));
        }
    }
    out
}
