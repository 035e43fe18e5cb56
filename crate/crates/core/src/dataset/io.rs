//! Versioned binary dataset file.
//!
//! Layout (all integers and floats little-endian; see [`crate::wire`] for
//! the section envelope of tag / length / payload / CRC-32):
//!
//! ```text
//! magic    "BFPD"
//! version  u32 = 1
//! META     m u32, b u32, n_classes u32,
//!          n_train u64, n_val u64, n_test u64,
//!          noise_seed u64, split_seed u64,
//!          noise_power f64, tx_gain f64,
//!          scene_hash 32 bytes, config_hash 32 bytes
//! RMAP     n_classes × (x f32, y f32)            class id = record index
//! TRAN     n_train × (class_id u32, m·2b × f32)  tensor values row-major
//! VALD     n_val   × (class_id u32, m·2b × f32)
//! TEST     n_test  × (point_id u32, sample_idx u32, x f32, y f32,
//!                     m·2b × f32)
//! ```

use super::{DatasetProvenance, FingerprintDataset, LabeledSample, TestRecord};
use crate::error::{Error, Result};
use crate::wire::{self, Decoder, Encoder};
use ndarray::Array2;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

pub const DATASET_MAGIC: &[u8; 4] = b"BFPD";
pub const DATASET_VERSION: u32 = 1;

pub fn save_dataset(dataset: &FingerprintDataset, path: &Path) -> Result<()> {
    dataset.validate()?;
    let mut w = BufWriter::new(File::create(path)?);
    wire::write_magic(&mut w, DATASET_MAGIC, DATASET_VERSION)?;

    let mut meta = Encoder::new();
    meta.put_u32(dataset.n_subcarriers as u32);
    meta.put_u32(dataset.n_beams as u32);
    meta.put_u32(dataset.reference_map.len() as u32);
    meta.put_u64(dataset.train.len() as u64);
    meta.put_u64(dataset.validation.len() as u64);
    meta.put_u64(dataset.test.len() as u64);
    meta.put_u64(dataset.provenance.noise_seed);
    meta.put_u64(dataset.provenance.split_seed);
    meta.put_f64(dataset.provenance.noise_power);
    meta.put_f64(dataset.provenance.tx_gain);
    meta.put_bytes(&dataset.provenance.scene_hash);
    meta.put_bytes(&dataset.provenance.config_hash);
    wire::write_section(&mut w, b"META", &meta.into_bytes())?;

    let mut rmap = Encoder::new();
    for &(x, y) in &dataset.reference_map {
        rmap.put_f32(x);
        rmap.put_f32(y);
    }
    wire::write_section(&mut w, b"RMAP", &rmap.into_bytes())?;

    let mut tran = Encoder::new();
    for s in &dataset.train {
        encode_labeled(&mut tran, s);
    }
    wire::write_section(&mut w, b"TRAN", &tran.into_bytes())?;

    let mut vald = Encoder::new();
    for s in &dataset.validation {
        encode_labeled(&mut vald, s);
    }
    wire::write_section(&mut w, b"VALD", &vald.into_bytes())?;

    let mut test = Encoder::new();
    for t in &dataset.test {
        test.put_u32(t.point_id);
        test.put_u32(t.sample_idx);
        test.put_f32(t.true_position.0);
        test.put_f32(t.true_position.1);
        test.put_f32_slice(t.values.as_slice().expect("row-major tensor"));
    }
    wire::write_section(&mut w, b"TEST", &test.into_bytes())?;
    Ok(())
}

fn encode_labeled(enc: &mut Encoder, sample: &LabeledSample) {
    enc.put_u32(sample.class_id);
    enc.put_f32_slice(sample.values.as_slice().expect("row-major tensor"));
}

pub fn load_dataset(path: &Path) -> Result<FingerprintDataset> {
    let mut r = BufReader::new(File::open(path)?);
    wire::read_magic(&mut r, DATASET_MAGIC, DATASET_VERSION)?;

    let meta_bytes = wire::read_section(&mut r, b"META")?;
    let mut meta = Decoder::new(&meta_bytes, "META");
    let m = meta.get_u32()? as usize;
    let b = meta.get_u32()? as usize;
    let n_classes = meta.get_u32()? as usize;
    let n_train = meta.get_u64()? as usize;
    let n_val = meta.get_u64()? as usize;
    let n_test = meta.get_u64()? as usize;
    let noise_seed = meta.get_u64()?;
    let split_seed = meta.get_u64()?;
    let noise_power = meta.get_f64()?;
    let tx_gain = meta.get_f64()?;
    let scene_hash: [u8; 32] = meta.get_bytes(32)?.try_into().unwrap();
    let config_hash: [u8; 32] = meta.get_bytes(32)?.try_into().unwrap();

    let rmap_bytes = wire::read_section(&mut r, b"RMAP")?;
    let mut rmap = Decoder::new(&rmap_bytes, "RMAP");
    let mut reference_map = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        let x = rmap.get_f32()?;
        let y = rmap.get_f32()?;
        reference_map.push((x, y));
    }

    let values_len = m * 2 * b;
    let tran_bytes = wire::read_section(&mut r, b"TRAN")?;
    let train = decode_labeled(&tran_bytes, n_train, m, b, values_len)?;
    let vald_bytes = wire::read_section(&mut r, b"VALD")?;
    let validation = decode_labeled(&vald_bytes, n_val, m, b, values_len)?;

    let test_bytes = wire::read_section(&mut r, b"TEST")?;
    let mut dec = Decoder::new(&test_bytes, "TEST");
    let mut test = Vec::with_capacity(n_test);
    for _ in 0..n_test {
        let point_id = dec.get_u32()?;
        let sample_idx = dec.get_u32()?;
        let x = dec.get_f32()?;
        let y = dec.get_f32()?;
        let values = dec.get_f32_vec(values_len)?;
        test.push(TestRecord {
            values: Array2::from_shape_vec((m, 2 * b), values).expect("sized above"),
            point_id,
            sample_idx,
            true_position: (x, y),
        });
    }

    let dataset = FingerprintDataset {
        n_subcarriers: m,
        n_beams: b,
        train,
        validation,
        test,
        reference_map,
        provenance: DatasetProvenance {
            scene_hash,
            config_hash,
            noise_seed,
            split_seed,
            noise_power,
            tx_gain,
        },
    };
    dataset.validate()?;
    Ok(dataset)
}

fn decode_labeled(
    bytes: &[u8],
    count: usize,
    m: usize,
    b: usize,
    values_len: usize,
) -> Result<Vec<LabeledSample>> {
    let mut dec = Decoder::new(bytes, "samples");
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let class_id = dec.get_u32()?;
        let values = dec.get_f32_vec(values_len)?;
        out.push(LabeledSample {
            values: Array2::from_shape_vec((m, 2 * b), values).expect("sized above"),
            class_id,
        });
    }
    if dec.remaining() != 0 {
        return Err(Error::Shape("trailing bytes in sample section".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::test_support::walled_scene;
    use crate::channel::LinkBudget;
    use crate::dataset::{generate_reference_set, generate_test_set, split};

    fn sample_dataset() -> FingerprintDataset {
        let mut scene = walled_scene();
        scene.test_points = vec![(45.0, -5.0), (30.0, 15.0)];
        let budget = LinkBudget {
            noise_power: 1e-13,
            tx_gain: 1.0,
        };
        let all = generate_reference_set(&scene, 4, &budget, 21).unwrap();
        let (train, validation) = split(&all, 0.5, 22).unwrap();
        let test = generate_test_set(&scene, 3, &budget, 21).unwrap();
        FingerprintDataset {
            n_subcarriers: scene.n_subcarriers,
            n_beams: 32,
            train,
            validation,
            test,
            reference_map: scene
                .reference_points
                .iter()
                .map(|&(x, y)| (x as f32, y as f32))
                .collect(),
            provenance: DatasetProvenance {
                scene_hash: [7; 32],
                config_hash: [9; 32],
                noise_seed: 21,
                split_seed: 22,
                noise_power: 1e-13,
                tx_gain: 1.0,
            },
        }
    }

    #[test]
    fn save_load_round_trip_is_bitwise() {
        let ds = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.bin");
        save_dataset(&ds, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(ds, back);

        // Re-saving the loaded dataset reproduces the file byte-for-byte.
        let path2 = dir.path().join("ds2.bin");
        save_dataset(&back, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn truncated_file_reports_truncation() {
        let ds = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.bin");
        save_dataset(&ds, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let cut = dir.path().join("cut.bin");
        std::fs::write(&cut, &bytes[..bytes.len() - 257]).unwrap();
        assert!(matches!(load_dataset(&cut), Err(Error::Truncated(_))));
    }

    #[test]
    fn corrupted_payload_reports_checksum() {
        let ds = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.bin");
        save_dataset(&ds, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x55;
        let bad = dir.path().join("bad.bin");
        std::fs::write(&bad, &bytes).unwrap();
        assert!(matches!(
            load_dataset(&bad),
            Err(Error::ChecksumMismatch(_))
        ));
    }

    #[test]
    fn wrong_version_reports_version() {
        let ds = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.bin");
        save_dataset(&ds, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 99; // version field
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_dataset(&path),
            Err(Error::FormatVersion { found: 99, .. })
        ));
    }
}
