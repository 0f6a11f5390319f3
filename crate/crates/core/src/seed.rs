//! Splittable seed derivation.
//!
//! Every random stream in the crate is a [`ChaCha8Rng`] seeded from a 64-bit
//! value obtained by folding a list of integer keys into a parent seed with
//! the SplitMix64 finalizer:
//!
//! ```text
//! state = parent
//! for key in keys: state = mix(state ^ mix(key + GOLDEN))
//! ```
//!
//! Harness tasks key their streams on `(experiment, grid index, user,
//! repetition, purpose)`, so a task's randomness never depends on which
//! worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream purposes, used as the last key when deriving a seed.
pub mod purpose {
    pub const SPLIT: u64 = 1;
    pub const NEGATIVES: u64 = 2;
    pub const TRAIN: u64 = 3;
    pub const MONTE_CARLO: u64 = 4;
    pub const POPULATION: u64 = 5;
    pub const BETA: u64 = 6;
    pub const TRIM: u64 = 7;
    pub const FEATURES: u64 = 8;
    pub const USERS: u64 = 9;
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(parent: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(parent, |state, &key| mix(state ^ mix(key.wrapping_add(GOLDEN))))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(parent: u64, keys: &[u64]) -> Rng {
    rng(derive(parent, keys))
}

/// Stable 64-bit key for a string label (FNV-1a).
pub fn label_key(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_order_sensitive() {
        assert_ne!(derive(7, &[1, 2]), derive(7, &[2, 1]));
        assert_eq!(derive(7, &[1, 2]), derive(derive(7, &[1]), &[2]));
    }

    #[test]
    fn label_keys_differ() {
        assert_ne!(label_key("mitigation"), label_key("propositions"));
    }
}
