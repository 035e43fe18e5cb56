//! Scene model and its plain-text configuration file.
//!
//! A scene is stored as a TOML file with the sections below. Positions are
//! in meters, frequencies in Hz, angles in degrees, and the seed is a bare
//! integer. Every key is required unless a default is noted.
//!
//! ```toml
//! [bs]
//! position = [-30.0, 10.0, 10.0]        # x, y, z (m)
//!
//! [array]
//! n_azimuth = 16                         # elements along the horizontal axis
//! n_elevation = 8                        # elements along the vertical axis
//! element_spacing = 0.5                  # wavelengths (default 0.5)
//! boresight_azimuth_deg = 0.0            # default 0
//! boresight_elevation_deg = 0.0          # default 0
//!
//! [radio]
//! carrier_frequency_hz = 30.0e9
//! subcarrier_spacing_hz = 60.0e3
//! n_subcarriers = 240
//! tx_gain = 1.0                          # linear amplitude scale (default 1)
//! rng_seed = 7
//!
//! [[buildings]]                          # zero or more
//! min = [12.0, 4.0]                      # footprint corner (m)
//! max = [18.0, 9.0]                      # opposite corner (m)
//! height = 15.0                          # m
//!
//! [points]
//! reference = [[0.0, 0.0], [10.0, 0.0]]  # surveyed training locations (m)
//! test = [[22.0, 6.5]]                   # evaluation locations (m)
//!
//! [provenance]                           # optional, written by the CLI
//! config_hash = "…hex…"
//! ```

use super::array::ArrayGeometry;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path as FsPath;

/// Axis-aligned rectangular building footprint with a height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub min: (f64, f64),
    pub max: (f64, f64),
    pub height: f64,
}

impl Building {
    /// Whether a ground point lies in the closed footprint.
    pub fn contains(&self, p: (f64, f64)) -> bool {
        p.0 >= self.min.0 && p.0 <= self.max.0 && p.1 >= self.min.1 && p.1 <= self.max.1
    }

    fn validate(&self) -> Result<()> {
        if !(self.min.0 < self.max.0 && self.min.1 < self.max.1) {
            return Err(Error::Geometry(format!(
                "degenerate building footprint ({:?}, {:?})",
                self.min, self.max
            )));
        }
        if !(self.height > 0.0) {
            return Err(Error::Geometry("building height must be positive".into()));
        }
        Ok(())
    }
}

/// Static radio environment: one base station, buildings, and the surveyed
/// reference/test locations. Immutable after construction and safe to share
/// across worker threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub bs_position: (f64, f64, f64),
    pub array: ArrayGeometry,
    pub carrier_frequency: f64,
    pub subcarrier_spacing: f64,
    pub n_subcarriers: usize,
    /// Linear amplitude scale applied to every traced path gain.
    pub tx_gain: f64,
    pub buildings: Vec<Building>,
    pub reference_points: Vec<(f64, f64)>,
    pub test_points: Vec<(f64, f64)>,
    pub rng_seed: u64,
    /// Hex hash of the run configuration that generated this scene, if any.
    pub config_hash: Option<String>,
}

impl Scene {
    /// Check all scene invariants.
    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers < 1 {
            return Err(Error::Config("n_subcarriers must be at least 1".into()));
        }
        if !(self.carrier_frequency > 0.0) || !(self.subcarrier_spacing > 0.0) {
            return Err(Error::Config("frequencies must be positive".into()));
        }
        if !(self.tx_gain > 0.0) {
            return Err(Error::Config("tx_gain must be positive".into()));
        }
        for b in &self.buildings {
            b.validate()?;
        }
        for &p in self.reference_points.iter().chain(self.test_points.iter()) {
            if self.buildings.iter().any(|b| b.contains(p)) {
                return Err(Error::BlockedLocation { x: p.0, y: p.1 });
            }
        }
        Ok(())
    }

    /// Carrier wavelength in meters.
    pub fn wavelength(&self) -> f64 {
        super::SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Frequency offset of subcarrier `m` from the carrier.
    ///
    /// Subcarriers are indexed symmetrically around the carrier:
    /// `f_m = (m - M/2) · Δf`.
    pub fn subcarrier_offset(&self, m: usize) -> f64 {
        (m as f64 - self.n_subcarriers as f64 / 2.0) * self.subcarrier_spacing
    }

    /// Load a scene from its TOML file.
    pub fn load(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Write the scene to its TOML file.
    pub fn save(&self, path: &FsPath) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: SceneFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("scene file: {e}")))?;
        let scene = Scene {
            bs_position: (file.bs.position[0], file.bs.position[1], file.bs.position[2]),
            array: ArrayGeometry::new(
                file.array.n_azimuth,
                file.array.n_elevation,
                file.array.element_spacing,
                (
                    file.array.boresight_azimuth_deg.to_radians(),
                    file.array.boresight_elevation_deg.to_radians(),
                ),
            )?,
            carrier_frequency: file.radio.carrier_frequency_hz,
            subcarrier_spacing: file.radio.subcarrier_spacing_hz,
            n_subcarriers: file.radio.n_subcarriers,
            tx_gain: file.radio.tx_gain,
            buildings: file.buildings,
            reference_points: file.points.reference.iter().map(|p| (p[0], p[1])).collect(),
            test_points: file.points.test.iter().map(|p| (p[0], p[1])).collect(),
            rng_seed: file.radio.rng_seed,
            config_hash: file.provenance.map(|p| p.config_hash),
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_toml(&self) -> Result<String> {
        let file = SceneFile {
            bs: BsSection {
                position: [self.bs_position.0, self.bs_position.1, self.bs_position.2],
            },
            array: ArraySection {
                n_azimuth: self.array.n_azimuth,
                n_elevation: self.array.n_elevation,
                element_spacing: self.array.element_spacing,
                boresight_azimuth_deg: self.array.orientation.0.to_degrees(),
                boresight_elevation_deg: self.array.orientation.1.to_degrees(),
            },
            radio: RadioSection {
                carrier_frequency_hz: self.carrier_frequency,
                subcarrier_spacing_hz: self.subcarrier_spacing,
                n_subcarriers: self.n_subcarriers,
                tx_gain: self.tx_gain,
                rng_seed: self.rng_seed,
            },
            buildings: self.buildings.clone(),
            points: PointsSection {
                reference: self.reference_points.iter().map(|&(x, y)| [x, y]).collect(),
                test: self.test_points.iter().map(|&(x, y)| [x, y]).collect(),
            },
            provenance: self
                .config_hash
                .clone()
                .map(|config_hash| ProvenanceSection { config_hash }),
        };
        toml::to_string_pretty(&file).map_err(|e| Error::Config(format!("scene encode: {e}")))
    }
}

#[derive(Serialize, Deserialize)]
struct SceneFile {
    bs: BsSection,
    array: ArraySection,
    radio: RadioSection,
    #[serde(default)]
    buildings: Vec<Building>,
    points: PointsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<ProvenanceSection>,
}

#[derive(Serialize, Deserialize)]
struct BsSection {
    position: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct ArraySection {
    n_azimuth: usize,
    n_elevation: usize,
    #[serde(default = "default_spacing")]
    element_spacing: f64,
    #[serde(default)]
    boresight_azimuth_deg: f64,
    #[serde(default)]
    boresight_elevation_deg: f64,
}

#[derive(Serialize, Deserialize)]
struct RadioSection {
    carrier_frequency_hz: f64,
    subcarrier_spacing_hz: f64,
    n_subcarriers: usize,
    #[serde(default = "default_tx_gain")]
    tx_gain: f64,
    rng_seed: u64,
}

#[derive(Serialize, Deserialize)]
struct PointsSection {
    reference: Vec<[f64; 2]>,
    test: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct ProvenanceSection {
    config_hash: String,
}

fn default_spacing() -> f64 {
    0.5
}

fn default_tx_gain() -> f64 {
    1.0
}
