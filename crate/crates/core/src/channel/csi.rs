//! Effective beamformed CSI, noise injection, per-beam SNR, and the
//! link-budget calibration.

use super::array::array_response;
use super::codebook::BeamCodebook;
use super::scene::Scene;
use super::trace::{trace_paths, PathSet};
use crate::error::{Error, Result};
use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::TAU;

/// Complex M x B matrix: rows are subcarriers, columns are beams.
pub type CsiMatrix = Array2<Complex64>;

/// Calibration target: best-beam LOS SNR in dB at the probe range.
pub const CALIBRATION_SNR_DB: f64 = 10.0;
/// Calibration probe distance from the base station, meters.
pub const CALIBRATION_RANGE_M: f64 = 100.0;

/// Noise power and transmit gain fixed for a scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Complex noise variance per CSI entry.
    pub noise_power: f64,
    /// Linear amplitude scale applied to path gains (mirrors the scene's).
    pub tx_gain: f64,
}

/// Noiseless effective beamformed CSI for one location's path set.
///
/// Entry (m, b) sums `gain_l · exp(-j 2π f_m τ_l) · (a(θ_l, φ_l)ᵀ F_b)`
/// over paths, with `f_m` the m-th subcarrier offset from the carrier.
/// The transmitted reference is fixed to 1, so this is both the received
/// signal (before noise) and the CSI estimate.
pub fn beamformed_csi(
    scene: &Scene,
    pathset: &PathSet,
    codebook: &BeamCodebook,
) -> Result<CsiMatrix> {
    if codebook.n_beams() == 0 {
        return Err(Error::Shape("codebook has no beams".into()));
    }
    if codebook.n_elements() != scene.array.n_elements() {
        return Err(Error::Shape(format!(
            "codebook built for {} elements, scene array has {}",
            codebook.n_elements(),
            scene.array.n_elements()
        )));
    }
    let m_count = scene.n_subcarriers;
    let b_count = codebook.n_beams();
    let mut out = Array2::<Complex64>::zeros((m_count, b_count));

    for path in &pathset.paths {
        let response = array_response(
            &scene.array,
            path.azimuth_departure,
            path.elevation_departure,
        );
        // Per-beam spatial coupling a(θ,φ)ᵀ F_b.
        let coupling: Vec<Complex64> = codebook
            .beams
            .iter()
            .map(|beam| {
                response
                    .iter()
                    .zip(beam)
                    .map(|(a, f)| a * f)
                    .sum::<Complex64>()
            })
            .collect();
        for m in 0..m_count {
            let phase = -TAU * scene.subcarrier_offset(m) * path.delay;
            let rot = path.complex_gain * Complex64::from_polar(1.0, phase);
            let mut row = out.row_mut(m);
            for (entry, g) in row.iter_mut().zip(&coupling) {
                *entry += rot * g;
            }
        }
    }
    Ok(out)
}

/// Add circularly-symmetric complex Gaussian noise, variance `noise_power`
/// per entry, drawn row-major (real then imaginary) from `rng`.
pub fn add_noise(csi: &CsiMatrix, budget: &LinkBudget, rng: &mut ChaCha8Rng) -> CsiMatrix {
    let std = (budget.noise_power / 2.0).sqrt();
    let normal = Normal::new(0.0, std).expect("finite noise std");
    let mut out = csi.clone();
    for entry in out.iter_mut() {
        let re = normal.sample(rng);
        let im = normal.sample(rng);
        *entry += Complex64::new(re, im);
    }
    out
}

/// Per-beam SNR in dB: `10·log10(Σ_m |r_m|² / (M σ²))`.
///
/// An all-zero vector returns the `f64::NEG_INFINITY` sentinel.
pub fn snr_per_beam(received: ArrayView1<Complex64>, noise_power: f64) -> f64 {
    assert!(noise_power > 0.0, "noise power must be positive");
    let signal: f64 = received.iter().map(|r| r.norm_sqr()).sum();
    if signal == 0.0 {
        return f64::NEG_INFINITY;
    }
    10.0 * (signal / (received.len() as f64 * noise_power)).log10()
}

/// Best beam of a CSI matrix by total received power: (beam index, SNR dB).
pub fn best_beam_snr(csi: &CsiMatrix, noise_power: f64) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for b in 0..csi.ncols() {
        let snr = snr_per_beam(csi.column(b), noise_power);
        if snr > best.1 {
            best = (b, snr);
        }
    }
    best
}

/// Choose the noise power so the best beam's noiseless SNR equals
/// [`CALIBRATION_SNR_DB`] at a probe [`CALIBRATION_RANGE_M`] from the BS
/// along the array boresight azimuth.
///
/// The probe sits at ground level, so its horizontal range is
/// `sqrt(range² - z_bs²)`; the solve is closed-form from the best beam's
/// signal power: `σ² = P_best / (M · 10^(target/10))`.
pub fn calibrate_noise(scene: &Scene, codebook: &BeamCodebook) -> Result<LinkBudget> {
    let z = scene.bs_position.2;
    let range2 = CALIBRATION_RANGE_M * CALIBRATION_RANGE_M - z * z;
    if range2 <= 0.0 {
        return Err(Error::Geometry(format!(
            "BS height {z} m leaves no ground probe at {CALIBRATION_RANGE_M} m range"
        )));
    }
    let ground = range2.sqrt();
    let az = scene.array.orientation.0;
    let probe = (
        scene.bs_position.0 + ground * az.cos(),
        scene.bs_position.1 + ground * az.sin(),
    );
    let paths = trace_paths(scene, probe)?;
    if !paths.has_los() {
        return Err(Error::Geometry(format!(
            "calibration probe at ({:.2}, {:.2}) has no line of sight",
            probe.0, probe.1
        )));
    }
    let csi = beamformed_csi(scene, &paths, codebook)?;
    let p_best = (0..csi.ncols())
        .map(|b| csi.column(b).iter().map(|r| r.norm_sqr()).sum::<f64>())
        .fold(0.0f64, f64::max);
    if p_best <= 0.0 {
        return Err(Error::Geometry("calibration probe received no power".into()));
    }
    let noise_power =
        p_best / (scene.n_subcarriers as f64 * 10f64.powf(CALIBRATION_SNR_DB / 10.0));
    Ok(LinkBudget {
        noise_power,
        tx_gain: scene.tx_gain,
    })
}

#[cfg(test)]
mod tests {
    use super::super::codebook::build_codebook;
    use super::super::scene::test_scenes::*;
    use super::*;
    use crate::seed;
    use ndarray::arr1;

    fn paper_codebook(scene: &Scene) -> BeamCodebook {
        build_codebook(&scene.array, 8, 4).unwrap()
    }

    #[test]
    fn empty_pathset_gives_zero_matrix() {
        let s = open_scene(10.0, 24);
        let cb = paper_codebook(&s);
        let csi = beamformed_csi(&s, &PathSet::default(), &cb).unwrap();
        assert_eq!(csi.dim(), (24, 32));
        assert!(csi.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn zero_delay_path_has_no_frequency_selectivity() {
        let s = open_scene(10.0, 16);
        let cb = paper_codebook(&s);
        let ps = PathSet {
            paths: vec![super::super::trace::Path {
                complex_gain: Complex64::new(1.0, 0.5),
                delay: 0.0,
                azimuth_departure: 0.2,
                elevation_departure: -0.1,
                is_los: true,
            }],
        };
        let csi = beamformed_csi(&s, &ps, &cb).unwrap();
        let first = csi.row(0).to_owned();
        for m in 1..csi.nrows() {
            for b in 0..csi.ncols() {
                assert!((csi[[m, b]] - first[b]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn aligned_path_maximizes_power_at_aligned_beam() {
        let s = open_scene(10.0, 16);
        let cb = paper_codebook(&s);
        for (target, &(az, el)) in cb.beam_grid.iter().enumerate() {
            let ps = PathSet {
                paths: vec![super::super::trace::Path {
                    complex_gain: Complex64::new(2.0e-6, 1.0e-6),
                    delay: 3.3e-7,
                    azimuth_departure: az,
                    elevation_departure: el,
                    is_los: true,
                }],
            };
            let csi = beamformed_csi(&s, &ps, &cb).unwrap();
            let powers: Vec<f64> = (0..csi.ncols())
                .map(|b| csi.column(b).iter().map(|z| z.norm_sqr()).sum())
                .collect();
            let argmax = powers
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(argmax, target, "beam {target} not the power argmax");
        }
    }

    #[test]
    fn csi_is_linear_in_path_gains() {
        let s = walled_scene();
        let cb = paper_codebook(&s);
        let ps = trace_paths(&s, (50.0, 0.0)).unwrap();
        let csi = beamformed_csi(&s, &ps, &cb).unwrap();
        let mut doubled = ps.clone();
        for p in &mut doubled.paths {
            p.complex_gain *= 2.0;
        }
        let csi2 = beamformed_csi(&s, &doubled, &cb).unwrap();
        for (a, b) in csi.iter().zip(csi2.iter()) {
            assert!((b - a * 2.0).norm() <= 1e-12 * b.norm().max(1e-300));
        }
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let s = open_scene(10.0, 32);
        let cb = paper_codebook(&s);
        let ps = trace_paths(&s, (50.0, 0.0)).unwrap();
        let csi = beamformed_csi(&s, &ps, &cb).unwrap();
        let budget = LinkBudget {
            noise_power: 1e-12,
            tx_gain: 1.0,
        };
        let a = add_noise(&csi, &budget, &mut seed::rng(9, &[1]));
        let b = add_noise(&csi, &budget, &mut seed::rng(9, &[1]));
        assert_eq!(a, b);
        let c = add_noise(&csi, &budget, &mut seed::rng(9, &[2]));
        assert_ne!(a, c);
    }

    #[test]
    fn noise_variance_matches_budget() {
        let s = open_scene(10.0, 50);
        let cb = build_codebook(&s.array, 10, 4).unwrap();
        let csi = beamformed_csi(&s, &PathSet::default(), &cb).unwrap();
        let budget = LinkBudget {
            noise_power: 0.35,
            tx_gain: 1.0,
        };
        // 50 x 40 x 50 draws = 1e5 complex entries.
        let mut rng = seed::rng(123, &[]);
        let mut sum = 0.0;
        let mut n = 0usize;
        for _ in 0..50 {
            let noisy = add_noise(&csi, &budget, &mut rng);
            sum += noisy.iter().map(|z| z.norm_sqr()).sum::<f64>();
            n += noisy.len();
        }
        let measured = sum / n as f64;
        assert!(
            (measured - budget.noise_power).abs() < 0.02 * budget.noise_power,
            "measured variance {measured}"
        );
    }

    #[test]
    fn snr_reference_values() {
        // Power ratio of exactly 1.
        let r = arr1(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        assert!((snr_per_beam(r.view(), 1.0)).abs() < 1e-12);

        // M=2, r=[1,1], sigma^2=0.5 -> 10 log10(2 / (2*0.5)) = 10 log10 2.
        let r = arr1(&[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
        let got = snr_per_beam(r.view(), 0.5);
        assert!((got - 10.0 * 2.0f64.log10()).abs() < 1e-12, "got {got}");
        assert!((got - 3.0103).abs() < 1e-4);
    }

    #[test]
    fn snr_scales_20_db_per_decade() {
        let r = arr1(&[
            Complex64::new(0.3, -0.2),
            Complex64::new(1.1, 0.7),
            Complex64::new(-0.4, 0.9),
        ]);
        let scaled = r.mapv(|z| z * 10.0);
        let d = snr_per_beam(scaled.view(), 0.1) - snr_per_beam(r.view(), 0.1);
        assert!((d - 20.0).abs() < 1e-9);
    }

    #[test]
    fn all_zero_vector_reports_sentinel() {
        let r = arr1(&[Complex64::new(0.0, 0.0); 4]);
        assert_eq!(snr_per_beam(r.view(), 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn calibration_hits_target_snr_at_probe() {
        let s = open_scene(10.0, 60);
        let cb = paper_codebook(&s);
        let budget = calibrate_noise(&s, &cb).unwrap();
        assert!(budget.noise_power > 0.0);

        let ground = (CALIBRATION_RANGE_M * CALIBRATION_RANGE_M - 100.0).sqrt();
        let probe = (ground, 0.0);
        let ps = trace_paths(&s, probe).unwrap();
        let csi = beamformed_csi(&s, &ps, &cb).unwrap();
        let (_, snr) = best_beam_snr(&csi, budget.noise_power);
        assert!((snr - CALIBRATION_SNR_DB).abs() < 0.01, "snr {snr}");
    }

    #[test]
    fn doubling_tx_gain_quadruples_calibrated_noise() {
        let s = open_scene(10.0, 24);
        let cb = paper_codebook(&s);
        let base = calibrate_noise(&s, &cb).unwrap();
        let mut boosted = s.clone();
        boosted.tx_gain = 2.0;
        let twice = calibrate_noise(&boosted, &cb).unwrap();
        let ratio = twice.noise_power / base.noise_power;
        assert!((ratio - 4.0).abs() < 1e-9, "ratio {ratio}");
    }

    #[test]
    fn inverse_square_law_through_full_pipeline() {
        // Planar scene (z = 0) so both probes sit exactly on boresight.
        let s = open_scene(0.0, 40);
        let cb = paper_codebook(&s);
        let budget = calibrate_noise(&s, &cb).unwrap();

        let far = (2.0 * CALIBRATION_RANGE_M, 0.0);
        let ps = trace_paths(&s, far).unwrap();
        let csi = beamformed_csi(&s, &ps, &cb).unwrap();
        let (_, snr) = best_beam_snr(&csi, budget.noise_power);
        let want = CALIBRATION_SNR_DB - 20.0 * 2.0f64.log10();
        assert!((snr - want).abs() < 1e-9, "snr {snr}, want {want}");
    }

    #[test]
    fn blocked_probe_fails_calibration() {
        let mut s = open_scene(10.0, 24);
        s.buildings.push(super::super::scene::Building {
            min: (40.0, -5.0),
            max: (45.0, 5.0),
            height: 30.0,
        });
        s.reference_points = vec![(5.0, 30.0)];
        s.test_points.clear();
        let cb = paper_codebook(&s);
        assert!(matches!(
            calibrate_noise(&s, &cb),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let s = open_scene(10.0, 24);
        let small_array =
            super::super::array::ArrayGeometry::new(4, 2, 0.5, (0.0, 0.0)).unwrap();
        let cb = build_codebook(&small_array, 4, 2).unwrap();
        assert!(matches!(
            beamformed_csi(&s, &PathSet::default(), &cb),
            Err(Error::Shape(_))
        ));
    }
}
