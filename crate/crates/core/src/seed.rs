//! Deterministic seed derivation.
//!
//! Every random draw in the pipeline comes from a `ChaCha8Rng` whose seed
//! is derived from an explicit base seed plus a list of integer tags
//! (purpose, point index, sample index, epoch, ...). Derivation uses the
//! splitmix64 finalizer, so independent tasks can draw in parallel without
//! sharing generator state and reruns with the same seeds are bit-identical.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags separating the independent noise domains.
pub mod tag {
    pub const REFERENCE_NOISE: u64 = 0x5245_464e;
    pub const TEST_NOISE: u64 = 0x5445_5354;
    pub const SPLIT: u64 = 0x5350_4c54;
    pub const SHUFFLE: u64 = 0x5348_464c;
    pub const INIT: u64 = 0x494e_4954;
}

/// splitmix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and a tag sequence.
pub fn derive(base: u64, tags: &[u64]) -> u64 {
    let mut s = mix64(base);
    for &t in tags {
        s = mix64(s ^ t);
    }
    s
}

/// Seeded generator for the given base seed and tag sequence.
pub fn rng(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, tags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derivation_is_deterministic() {
        assert_eq!(derive(7, &[1, 2, 3]), derive(7, &[1, 2, 3]));
    }

    #[test]
    fn tag_order_matters() {
        assert_ne!(derive(7, &[1, 2]), derive(7, &[2, 1]));
        assert_ne!(derive(7, &[tag::REFERENCE_NOISE]), derive(7, &[tag::TEST_NOISE]));
    }

    #[test]
    fn rngs_with_same_tags_emit_identical_streams() {
        let mut a = rng(42, &[tag::SHUFFLE, 5]);
        let mut b = rng(42, &[tag::SHUFFLE, 5]);
        for _ in 0..16 {
            assert_eq!(a.gen::<u64>(), b.gen::<u64>());
        }
    }
}
