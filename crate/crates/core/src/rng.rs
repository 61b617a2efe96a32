//! Seed derivation.
//!
//! All randomness flows through ChaCha8 streams. A run seed is split into
//! independent substreams by hashing `(seed, index, tag)` with the SplitMix64
//! finalizer, so trial `t` of a run draws the same numbers no matter which
//! thread executes it or in which order trials are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags keep substreams for different quantities disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Matrix = 0x4d41_5452,
    Signal = 0x5349_474e,
    Noise = 0x4e4f_4953,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of substream `(index, tag)` under `seed`.
pub fn derive_seed(seed: u64, index: u64, tag: Stream) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ index) ^ tag as u64)
}

pub fn substream(seed: u64, index: u64, tag: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, index, tag))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_are_distinct_across_tags_and_indices() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..1000 {
            for tag in [Stream::Matrix, Stream::Signal, Stream::Noise] {
                assert!(seen.insert(derive_seed(42, i, tag)));
            }
        }
    }

    #[test]
    fn derivation_is_stable() {
        assert_eq!(derive_seed(1, 2, Stream::Noise), derive_seed(1, 2, Stream::Noise));
        assert_ne!(derive_seed(1, 2, Stream::Noise), derive_seed(2, 2, Stream::Noise));
    }
}
