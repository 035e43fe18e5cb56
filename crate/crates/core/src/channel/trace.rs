//! LOS + single-bounce path tracing over building footprints.
//!
//! Occlusion is tested in plan view: a ray is blocked when its ground
//! segment crosses the interior of any footprint. The base-station height
//! only enters path lengths and departure elevations; user locations sit
//! at ground level. Reflections come from the mirror-image construction:
//! one specular candidate per building wall, kept when both legs of the
//! unfolded route are unobstructed.

use super::scene::{Building, Scene};
use super::SPEED_OF_LIGHT;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Amplitude scale applied per wall bounce (-6 dB).
pub const REFLECTION_AMPLITUDE: f64 = 0.501_187_233_627_272_2; // 10^(-6/20)

const EPS: f64 = 1e-9;

/// One propagation path from the base station to a user location.
#[derive(Debug, Clone)]
pub struct Path {
    /// Complex amplitude: free-space loss, transmit gain, reflection loss,
    /// and the carrier-phase rotation of the total delay.
    pub complex_gain: Complex64,
    /// Propagation delay in seconds.
    pub delay: f64,
    /// Departure azimuth at the base station, global frame, radians.
    pub azimuth_departure: f64,
    /// Departure elevation at the base station, radians (negative = down).
    pub elevation_departure: f64,
    pub is_los: bool,
}

/// All paths reaching one location. Empty means total blockage.
#[derive(Debug, Clone, Default)]
pub struct PathSet {
    pub paths: Vec<Path>,
}

impl PathSet {
    pub fn has_los(&self) -> bool {
        self.paths.iter().any(|p| p.is_los)
    }
}

/// Whether segment `a`-`b` crosses the interior of the footprint.
///
/// Liang-Barsky clipping against the closed rectangle; the crossing counts
/// only if the clipped piece has positive length and its midpoint is
/// strictly inside, so segments that merely touch a wall or run along one
/// do not block.
fn segment_blocked_by(a: (f64, f64), b: (f64, f64), rect: &Building) -> bool {
    let d = (b.0 - a.0, b.1 - a.1);
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for (p, q) in [
        (-d.0, a.0 - rect.min.0),
        (d.0, rect.max.0 - a.0),
        (-d.1, a.1 - rect.min.1),
        (d.1, rect.max.1 - a.1),
    ] {
        if p.abs() < EPS {
            // Parallel to this slab; outside it means no crossing at all.
            if q < 0.0 {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
        }
    }
    if hi - lo <= EPS {
        return false;
    }
    let mid = 0.5 * (lo + hi);
    let m = (a.0 + mid * d.0, a.1 + mid * d.1);
    m.0 > rect.min.0 + EPS
        && m.0 < rect.max.0 - EPS
        && m.1 > rect.min.1 + EPS
        && m.1 < rect.max.1 - EPS
}

fn segment_clear(scene: &Scene, a: (f64, f64), b: (f64, f64)) -> bool {
    !scene.buildings.iter().any(|r| segment_blocked_by(a, b, r))
}

/// The four wall segments of a footprint, counter-clockwise.
fn walls(b: &Building) -> [((f64, f64), (f64, f64)); 4] {
    let (x0, y0) = b.min;
    let (x1, y1) = b.max;
    [
        ((x0, y0), (x1, y0)),
        ((x1, y0), (x1, y1)),
        ((x1, y1), (x0, y1)),
        ((x0, y1), (x0, y0)),
    ]
}

/// Mirror `p` across the infinite line through `a`-`b`.
fn mirror(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let d = (b.0 - a.0, b.1 - a.1);
    let len2 = d.0 * d.0 + d.1 * d.1;
    let t = ((p.0 - a.0) * d.0 + (p.1 - a.1) * d.1) / len2;
    let foot = (a.0 + t * d.0, a.1 + t * d.1);
    (2.0 * foot.0 - p.0, 2.0 * foot.1 - p.1)
}

/// Signed side of `p` relative to the directed line `a`->`b`.
fn side(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Intersection of segments `p0`-`p1` and `q0`-`q1`, as parameters (t, s).
fn segment_intersection(
    p0: (f64, f64),
    p1: (f64, f64),
    q0: (f64, f64),
    q1: (f64, f64),
) -> Option<(f64, f64)> {
    let r = (p1.0 - p0.0, p1.1 - p0.1);
    let s = (q1.0 - q0.0, q1.1 - q0.1);
    let denom = r.0 * s.1 - r.1 * s.0;
    if denom.abs() < EPS {
        return None;
    }
    let qp = (q0.0 - p0.0, q0.1 - p0.1);
    let t = (qp.0 * s.1 - qp.1 * s.0) / denom;
    let u = (qp.0 * r.1 - qp.1 * r.0) / denom;
    if t > EPS && t < 1.0 - EPS && (-EPS..=1.0 + EPS).contains(&u) {
        Some((t, u.clamp(0.0, 1.0)))
    } else {
        None
    }
}

/// Build the path from a 2-D route of unfolded ground length `ground_len`
/// whose first segment leaves the BS toward `first_leg_dir`.
fn make_path(scene: &Scene, ground_len: f64, first_leg_dir: (f64, f64), bounces: u32) -> Path {
    let z = scene.bs_position.2;
    let dist = (ground_len * ground_len + z * z).sqrt();
    let delay = dist / SPEED_OF_LIGHT;
    let amplitude = scene.wavelength() / (4.0 * std::f64::consts::PI * dist)
        * scene.tx_gain
        * REFLECTION_AMPLITUDE.powi(bounces as i32);
    // Carrier-phase rotation accumulated over the full route.
    let phase = -TAU * scene.carrier_frequency * delay;
    Path {
        complex_gain: Complex64::from_polar(amplitude, phase),
        delay,
        azimuth_departure: first_leg_dir.1.atan2(first_leg_dir.0),
        elevation_departure: (-z).atan2(ground_len),
        is_los: bounces == 0,
    }
}

/// Trace all LOS and single-bounce paths from the base station to `location`.
pub fn trace_paths(scene: &Scene, location: (f64, f64)) -> Result<PathSet> {
    if scene.buildings.iter().any(|b| b.contains(location)) {
        return Err(Error::BlockedLocation {
            x: location.0,
            y: location.1,
        });
    }
    let bs = (scene.bs_position.0, scene.bs_position.1);
    let mut paths = Vec::new();

    if segment_clear(scene, bs, location) {
        let dir = (location.0 - bs.0, location.1 - bs.1);
        let ground_len = (dir.0 * dir.0 + dir.1 * dir.1).sqrt();
        paths.push(make_path(scene, ground_len, dir, 0));
    }

    for building in &scene.buildings {
        for (a, b) in walls(building) {
            // A specular bounce needs BS and UE on the same side of the wall.
            let side_bs = side(bs, a, b);
            let side_ue = side(location, a, b);
            if side_bs.abs() < EPS || side_ue.abs() < EPS || side_bs * side_ue < 0.0 {
                continue;
            }
            let bs_image = mirror(bs, a, b);
            let Some((_, s)) = segment_intersection(bs_image, location, a, b) else {
                continue;
            };
            let hit = (a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1));
            if !segment_clear(scene, bs, hit) || !segment_clear(scene, hit, location) {
                continue;
            }
            let unfolded = (location.0 - bs_image.0, location.1 - bs_image.1);
            let ground_len = (unfolded.0 * unfolded.0 + unfolded.1 * unfolded.1).sqrt();
            let dir = (hit.0 - bs.0, hit.1 - bs.1);
            paths.push(make_path(scene, ground_len, dir, 1));
        }
    }
    Ok(PathSet { paths })
}

#[cfg(test)]
mod tests {
    use super::super::scene::test_scenes::*;
    use super::*;

    #[test]
    fn open_scene_yields_single_los_path() {
        let s = open_scene(10.0, 8);
        let ps = trace_paths(&s, (50.0, 0.0)).unwrap();
        assert_eq!(ps.paths.len(), 1);
        assert!(ps.paths[0].is_los);
        let expected = (50.0f64 * 50.0 + 100.0).sqrt() / SPEED_OF_LIGHT;
        assert!((ps.paths[0].delay - expected).abs() < 1e-18);
    }

    #[test]
    fn wall_between_blocks_los() {
        let s = walled_scene();
        // (50, 0) is directly behind the (20..24, -10..10) block.
        let ps = trace_paths(&s, (50.0, 0.0)).unwrap();
        assert!(!ps.has_los());
    }

    #[test]
    fn location_inside_building_is_rejected() {
        let s = walled_scene();
        assert!(matches!(
            trace_paths(&s, (22.0, 0.0)),
            Err(Error::BlockedLocation { .. })
        ));
    }

    #[test]
    fn mirror_route_lengths_match_hand_geometry() {
        // BS at origin (z=0), UE at (10, 0), reflector wall along y = 5
        // (the south face of a slab spanning x in [-20, 30]).
        let mut s = open_scene(0.0, 8);
        s.buildings = vec![Building {
            min: (-20.0, 5.0),
            max: (30.0, 8.0),
            height: 10.0,
        }];
        s.reference_points = vec![(10.0, 0.0)];
        s.test_points.clear();
        let ps = trace_paths(&s, (10.0, 0.0)).unwrap();
        assert_eq!(ps.paths.len(), 2);
        assert!(ps.paths[0].is_los);

        // Image of BS across y = 5 sits at (0, 10); route length is the
        // straight distance image->UE = sqrt(10^2 + 10^2).
        let want_len = (200.0f64).sqrt();
        let refl = &ps.paths[1];
        assert!(!refl.is_los);
        assert!((refl.delay - want_len / SPEED_OF_LIGHT).abs() < 1e-18);
        // Departure heads toward the bounce point (5, 5), i.e. 45 degrees.
        assert!((refl.azimuth_departure - std::f64::consts::FRAC_PI_4).abs() < 1e-12);

        // LOS delay for comparison: 10 m direct.
        assert!((ps.paths[0].delay - 10.0 / SPEED_OF_LIGHT).abs() < 1e-18);
    }

    #[test]
    fn reflection_loss_is_6_db_amplitude() {
        let mut s = open_scene(0.0, 8);
        s.buildings = vec![Building {
            min: (-20.0, 5.0),
            max: (30.0, 8.0),
            height: 10.0,
        }];
        let ps = trace_paths(&s, (10.0, 0.0)).unwrap();
        let refl = ps.paths.iter().find(|p| !p.is_los).unwrap();
        let want_len = (200.0f64).sqrt();
        let free_space = s.wavelength() / (4.0 * std::f64::consts::PI * want_len);
        let ratio = refl.complex_gain.norm() / free_space;
        assert!((20.0 * ratio.log10() + 6.0).abs() < 1e-9);
    }

    #[test]
    fn los_flag_is_reciprocal() {
        let s = walled_scene();
        let here = (s.bs_position.0, s.bs_position.1);
        for &p in &[(50.0, 0.0), (5.0, 5.0), (45.0, -5.0), (-30.0, 12.0)] {
            let forward = trace_paths(&s, p).unwrap().has_los();
            let mut swapped = s.clone();
            swapped.bs_position = (p.0, p.1, s.bs_position.2);
            swapped.reference_points = vec![here];
            swapped.test_points.clear();
            let backward = trace_paths(&swapped, here).unwrap().has_los();
            assert_eq!(forward, backward, "asymmetric LOS at {p:?}");
        }
    }

    #[test]
    fn blocked_point_still_reaches_via_reflector() {
        let s = walled_scene();
        // (50, 0) is shadowed by the first block but the second block
        // (y in [20, 24]) acts as a mirror north of both endpoints.
        let ps = trace_paths(&s, (50.0, 0.0)).unwrap();
        assert!(!ps.has_los());
        assert!(!ps.paths.is_empty(), "expected at least one bounce path");
        assert!(ps.paths.iter().all(|p| p.delay > 0.0));
    }

    #[test]
    fn at_most_one_los_path() {
        let s = walled_scene();
        for &p in &[(50.0, 0.0), (5.0, 5.0), (45.0, -5.0)] {
            let ps = trace_paths(&s, p).unwrap();
            assert!(ps.paths.iter().filter(|p| p.is_los).count() <= 1);
        }
    }
}
