//! Top-R weighted-centroid position decoding.

use crate::error::{Error, Result};

/// Class index -> reference point coordinates, contiguous from class 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMap {
    points: Vec<(f64, f64)>,
}

impl ReferenceMap {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::NonFinite("reference map coordinates"));
        }
        Ok(Self { points })
    }

    /// Widen a dataset's stored f32 map.
    pub fn from_f32(points: &[(f32, f32)]) -> Self {
        Self {
            points: points.iter().map(|&(x, y)| (x as f64, y as f64)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn position(&self, class_id: usize) -> (f64, f64) {
        self.points[class_id]
    }
}

/// A decoded position with its supporting classes and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionEstimate {
    pub x: f64,
    pub y: f64,
    /// The R selected classes, by descending probability (ties to the
    /// lower class id).
    pub selected_classes: Vec<usize>,
    /// Renormalized weights of the selected classes; positive, sum one.
    pub selected_weights: Vec<f64>,
}

/// Decode class probabilities into a position: pick the R most probable
/// reference points, renormalize their probabilities, and return the
/// weighted sum of their coordinates.
pub fn predict_position(
    probs: &[f64],
    ref_map: &ReferenceMap,
    r: usize,
) -> Result<PositionEstimate> {
    if probs.len() != ref_map.len() {
        return Err(Error::Shape(format!(
            "{} probabilities for {} reference points",
            probs.len(),
            ref_map.len()
        )));
    }
    if r < 1 || r > ref_map.len() {
        return Err(Error::Config(format!(
            "R must be in 1..={}, got {r}",
            ref_map.len()
        )));
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    order.truncate(r);

    let total: f64 = order.iter().map(|&i| probs[i]).sum();
    if !(total > 0.0) {
        return Err(Error::Config("selected probabilities sum to zero".into()));
    }
    let mut x = 0.0;
    let mut y = 0.0;
    let mut weights = Vec::with_capacity(r);
    for &i in &order {
        let w = probs[i] / total;
        let (px, py) = ref_map.position(i);
        x += w * px;
        y += w * py;
        weights.push(w);
    }
    Ok(PositionEstimate {
        x,
        y,
        selected_classes: order,
        selected_weights: weights,
    })
}

/// Euclidean distance between the estimate and the ground truth, meters.
pub fn euclidean_error(estimate: &PositionEstimate, truth: (f64, f64)) -> f64 {
    let dx = estimate.x - truth.0;
    let dy = estimate.y - truth.1;
    (dx * dx + dy * dy).sqrt()
}
