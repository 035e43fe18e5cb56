//! Online phase: decode softmax probabilities into continuous positions.
//!
//! The estimate is the weighted centroid of the R reference points with
//! the largest class probabilities, weights renormalized among the
//! selected points. Evaluation reports per-sample Euclidean errors against
//! ground truth, per-point and overall means, and per-sample inference
//! latency measured single-threaded.

mod decode;
mod evaluate;

pub use decode::{euclidean_error, predict_position, PositionEstimate, ReferenceMap};
pub use evaluate::{evaluate, track_min_mean_error, ErrorReport, SampleError};
