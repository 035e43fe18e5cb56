//! Labeled sample generation and stratified splitting.
//!
//! Each sample's noise comes from its own generator, seeded by
//! (base seed, purpose tag, point index, draw index), so generation is
//! embarrassingly parallel per sample and bit-identical regardless of
//! thread count or feature flags.

use super::tensor::to_real_tensor;
use super::{LabeledSample, TestRecord};
use crate::channel::{add_noise, beamformed_csi, trace_paths, BeamCodebook, LinkBudget, Scene};
use crate::error::{Error, Result};
use crate::par;
use crate::seed::{self, tag};
use ndarray::Array2;

fn noiseless_tensors(
    scene: &Scene,
    codebook: &BeamCodebook,
    points: &[(f64, f64)],
) -> Result<Vec<crate::channel::CsiMatrix>> {
    points
        .iter()
        .map(|&p| {
            let paths = trace_paths(scene, p)?;
            beamformed_csi(scene, &paths, codebook)
        })
        .collect()
}

fn quantize(tensor: &Array2<f64>) -> Array2<f32> {
    tensor.mapv(|x| x as f32)
}

/// Generate `samples_per_point` noisy labeled tensors at every reference
/// point. Sample k of point i is labeled class i and uses the noise stream
/// `(seed, REFERENCE_NOISE, i, k)`.
pub fn generate_reference_set(
    scene: &Scene,
    samples_per_point: usize,
    budget: &LinkBudget,
    noise_seed: u64,
) -> Result<Vec<LabeledSample>> {
    if scene.reference_points.is_empty() {
        return Err(Error::Config("scene has no reference points".into()));
    }
    let codebook = default_codebook(scene)?;
    generate_reference_set_with(scene, &codebook, samples_per_point, budget, noise_seed)
}

/// As [`generate_reference_set`] but with an explicit codebook.
pub fn generate_reference_set_with(
    scene: &Scene,
    codebook: &BeamCodebook,
    samples_per_point: usize,
    budget: &LinkBudget,
    noise_seed: u64,
) -> Result<Vec<LabeledSample>> {
    if scene.reference_points.is_empty() {
        return Err(Error::Config("scene has no reference points".into()));
    }
    let clean = noiseless_tensors(scene, codebook, &scene.reference_points)?;
    let n_points = clean.len();
    let out = par::map_indexed(n_points * samples_per_point, |idx| {
        let point = idx / samples_per_point;
        let draw = idx % samples_per_point;
        let mut rng = seed::rng(
            noise_seed,
            &[tag::REFERENCE_NOISE, point as u64, draw as u64],
        );
        let noisy = add_noise(&clean[point], budget, &mut rng);
        let tensor = to_real_tensor(&noisy).expect("noise keeps values finite");
        LabeledSample {
            values: quantize(&tensor),
            class_id: point as u32,
        }
    });
    Ok(out)
}

/// Generate test records carrying ground-truth coordinates instead of
/// labels, on independent noise streams `(seed, TEST_NOISE, i, k)`.
pub fn generate_test_set(
    scene: &Scene,
    samples_per_point: usize,
    budget: &LinkBudget,
    noise_seed: u64,
) -> Result<Vec<TestRecord>> {
    let codebook = default_codebook(scene)?;
    generate_test_set_with(scene, &codebook, samples_per_point, budget, noise_seed)
}

/// As [`generate_test_set`] but with an explicit codebook.
pub fn generate_test_set_with(
    scene: &Scene,
    codebook: &BeamCodebook,
    samples_per_point: usize,
    budget: &LinkBudget,
    noise_seed: u64,
) -> Result<Vec<TestRecord>> {
    if scene.test_points.is_empty() {
        return Ok(Vec::new());
    }
    let clean = noiseless_tensors(scene, codebook, &scene.test_points)?;
    let n_points = clean.len();
    let out = par::map_indexed(n_points * samples_per_point, |idx| {
        let point = idx / samples_per_point;
        let draw = idx % samples_per_point;
        let mut rng = seed::rng(noise_seed, &[tag::TEST_NOISE, point as u64, draw as u64]);
        let noisy = add_noise(&clean[point], budget, &mut rng);
        let tensor = to_real_tensor(&noisy).expect("noise keeps values finite");
        let (x, y) = scene.test_points[point];
        TestRecord {
            values: quantize(&tensor),
            point_id: point as u32,
            sample_idx: draw as u32,
            true_position: (x as f32, y as f32),
        }
    });
    Ok(out)
}

/// Paper-style codebook sized from the array: as many azimuth beams as
/// half the azimuth elements, elevation likewise, minimum one.
fn default_codebook(scene: &Scene) -> Result<BeamCodebook> {
    crate::channel::build_codebook(
        &scene.array,
        (scene.array.n_azimuth / 2).max(1),
        (scene.array.n_elevation / 2).max(1),
    )
}

/// Stratified random split into train and validation.
///
/// Within each class the samples are shuffled by the stream
/// `(seed, SPLIT, class)` and the first `round(fraction · n)` go to train
/// (clamped so both sides keep at least one sample). The two outputs are
/// disjoint and exhaust the input.
pub fn split(
    samples: &[LabeledSample],
    train_fraction: f64,
    split_seed: u64,
) -> Result<(Vec<LabeledSample>, Vec<LabeledSample>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut classes: Vec<u32> = samples.iter().map(|s| s.class_id).collect();
    classes.sort_unstable();
    classes.dedup();

    let mut train = Vec::new();
    let mut validation = Vec::new();
    for &class in &classes {
        let mut idx: Vec<usize> = samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.class_id == class)
            .map(|(i, _)| i)
            .collect();
        if idx.len() < 2 {
            return Err(Error::Config(format!(
                "class {class} has {} sample(s); need at least 2 to split",
                idx.len()
            )));
        }
        let mut rng = seed::rng(split_seed, &[tag::SPLIT, class as u64]);
        use rand::seq::SliceRandom;
        idx.shuffle(&mut rng);
        let n_train = ((train_fraction * idx.len() as f64).round() as usize)
            .clamp(1, idx.len() - 1);
        for (k, &i) in idx.iter().enumerate() {
            if k < n_train {
                train.push(samples[i].clone());
            } else {
                validation.push(samples[i].clone());
            }
        }
    }
    Ok((train, validation))
}
