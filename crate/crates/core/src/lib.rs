//! Beamformed 5G mmWave CSI fingerprint positioning.
//!
//! An end-to-end pipeline that synthesizes beamformed channel state
//! information for an urban-like scene, trains a convolutional classifier
//! over surveyed reference points, and decodes softmax probabilities into
//! continuous position estimates via a top-R weighted centroid.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`channel`] — geometric LOS + single-bounce channel model, beam
//!   codebooks, per-beam SNR, and link-budget calibration.
//! - [`dataset`] — complex-to-real tensor packing, labeled sample
//!   generation, stratified splitting, and a versioned binary file format.
//! - [`nn`] — a from-scratch CNN (conv / ReLU / max-pool / batch-norm /
//!   linear) with exact analytic gradients, AdamW, and checkpointing.
//! - [`positioning`] — top-R weighted-centroid decoding and error reports.
//!
//! Data-parallel inner loops (sample generation, convolution kernels,
//! batch evaluation) run on rayon when the default `parallel` feature is
//! enabled and fall back to equivalent sequential loops without it. Both
//! paths produce bit-identical results: every parallel task owns a
//! disjoint output slice and accumulates in the same order as the
//! sequential code.

pub mod channel;
pub mod dataset;
pub mod error;
pub mod nn;
pub mod par;
pub mod positioning;
pub mod seed;
pub mod wire;

pub use error::{Error, Result};
