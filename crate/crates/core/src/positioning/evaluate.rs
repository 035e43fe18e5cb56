//! Checkpoint evaluation over a test set.

use super::decode::{euclidean_error, predict_position, ReferenceMap};
use crate::dataset::TestRecord;
use crate::error::Result;
use crate::nn::loss::softmax;
use crate::nn::{Network, Tensor4};
use std::time::Instant;

/// One evaluated test sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleError {
    pub point_id: u32,
    pub sample_idx: u32,
    pub error_m: f64,
}

/// Positioning errors of one evaluation pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub per_sample: Vec<SampleError>,
    /// (test point id, mean error) for every point present, ascending id.
    pub per_point_mean: Vec<(u32, f64)>,
    /// Mean over all samples; `None` for an empty test set.
    pub overall_mean: Option<f64>,
    /// Per-sample inference latency in seconds (forward + decode,
    /// excluding tensor assembly), in evaluation order.
    pub latencies: Vec<f64>,
}

impl ErrorReport {
    /// Median of the per-sample latencies.
    pub fn median_latency(&self) -> Option<f64> {
        if self.latencies.is_empty() {
            return None;
        }
        let mut sorted = self.latencies.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        Some(if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        })
    }
}

/// Run eval-mode inference on every test record, decode positions with the
/// top-`r` centroid, and aggregate errors. Samples are processed one at a
/// time on the calling thread so the latency figures are single-threaded.
pub fn evaluate(
    net: &Network,
    test: &[TestRecord],
    ref_map: &ReferenceMap,
    r: usize,
) -> Result<ErrorReport> {
    let mut per_sample = Vec::with_capacity(test.len());
    let mut latencies = Vec::with_capacity(test.len());
    for record in test {
        let (m, cols) = record.values.dim();
        let data: Vec<f64> = record.values.iter().map(|&v| v as f64).collect();
        let input = Tensor4::from_vec((1, 1, m, cols), data);

        let started = Instant::now();
        let logits = net.forward_eval(&input)?;
        let probs = softmax(logits.row(0));
        let estimate = predict_position(&probs, ref_map, r)?;
        latencies.push(started.elapsed().as_secs_f64());

        let truth = (
            record.true_position.0 as f64,
            record.true_position.1 as f64,
        );
        per_sample.push(SampleError {
            point_id: record.point_id,
            sample_idx: record.sample_idx,
            error_m: euclidean_error(&estimate, truth),
        });
    }

    let mut point_ids: Vec<u32> = per_sample.iter().map(|s| s.point_id).collect();
    point_ids.sort_unstable();
    point_ids.dedup();
    let per_point_mean = point_ids
        .into_iter()
        .map(|id| {
            let errors: Vec<f64> = per_sample
                .iter()
                .filter(|s| s.point_id == id)
                .map(|s| s.error_m)
                .collect();
            (id, errors.iter().sum::<f64>() / errors.len() as f64)
        })
        .collect();
    let overall_mean = if per_sample.is_empty() {
        None
    } else {
        Some(per_sample.iter().map(|s| s.error_m).sum::<f64>() / per_sample.len() as f64)
    };
    Ok(ErrorReport {
        per_sample,
        per_point_mean,
        overall_mean,
        latencies,
    })
}

/// Epoch (0-based index into `reports`) with the lowest overall mean error,
/// and that error. Reports without a mean (empty test set) are skipped.
pub fn track_min_mean_error(reports: &[ErrorReport]) -> Option<(usize, f64)> {
    reports
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.overall_mean.map(|m| (i, m)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::TestRecord;
    use crate::nn::network::test_configs::tiny;
    use ndarray::Array2;

    fn dummy_report(mean: f64) -> ErrorReport {
        ErrorReport {
            per_sample: vec![SampleError {
                point_id: 0,
                sample_idx: 0,
                error_m: mean,
            }],
            per_point_mean: vec![(0, mean)],
            overall_mean: Some(mean),
            latencies: vec![0.0],
        }
    }

    #[test]
    fn min_mean_tracking_is_argmin() {
        let reports = vec![dummy_report(2.0), dummy_report(0.9), dummy_report(1.1)];
        assert_eq!(track_min_mean_error(&reports), Some((1, 0.9)));

        let single = vec![dummy_report(3.0)];
        assert_eq!(track_min_mean_error(&single), Some((0, 3.0)));

        // Monotone decreasing history: last epoch wins.
        let mono = vec![dummy_report(3.0), dummy_report(2.0), dummy_report(1.0)];
        assert_eq!(track_min_mean_error(&mono), Some((2, 1.0)));

        assert_eq!(track_min_mean_error(&[]), None);
    }

    #[test]
    fn empty_test_set_yields_empty_report() {
        let net = crate::nn::Network::new(tiny(71)).unwrap();
        let map = ReferenceMap::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        let report = evaluate(&net, &[], &map, 1).unwrap();
        assert!(report.per_sample.is_empty());
        assert!(report.per_point_mean.is_empty());
        assert_eq!(report.overall_mean, None);
        assert_eq!(report.median_latency(), None);
    }

    #[test]
    fn overall_mean_matches_independent_average() {
        let net = crate::nn::Network::new(tiny(72)).unwrap();
        let map = ReferenceMap::new(vec![(0.0, 0.0), (10.0, 0.0)]).unwrap();
        let records: Vec<TestRecord> = (0..6)
            .map(|k| TestRecord {
                values: Array2::from_shape_fn((12, 8), |(r, c)| {
                    (r as f32 - c as f32) * 0.1 + k as f32 * 0.01
                }),
                point_id: k % 2,
                sample_idx: k / 2,
                true_position: (3.0, 4.0),
            })
            .collect();
        let report = evaluate(&net, &records, &map, 2).unwrap();
        let mean = report
            .per_sample
            .iter()
            .map(|s| s.error_m)
            .sum::<f64>()
            / report.per_sample.len() as f64;
        assert!((report.overall_mean.unwrap() - mean).abs() < 1e-12);
        assert_eq!(report.per_point_mean.len(), 2);
        assert_eq!(report.latencies.len(), 6);
    }

    #[test]
    fn median_latency_handles_even_counts() {
        let mut r = dummy_report(1.0);
        r.latencies = vec![4.0, 1.0, 3.0, 2.0];
        assert_eq!(r.median_latency(), Some(2.5));
    }
}
