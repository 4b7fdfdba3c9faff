//! Seeded stream derivation for reproducible parallel sampling.
//!
//! All randomness flows from one 64-bit root seed. Independent work items
//! (study cells, replicates, permutations) derive their own generator from
//! the root seed and a path of indices, so results are identical for any
//! worker count and any execution order. The derivation mixes each path
//! element into the state with SplitMix64.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 output function; a cheap, well-mixed 64-bit permutation.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Collapse `(seed, path)` into a single derived seed.
///
/// Each step multiplies the state by an odd constant before folding in the
/// hashed path element; a plain XOR fold would cancel whenever the state
/// happened to equal the element hash.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    let mut state = splitmix64(seed);
    for (depth, &p) in path.iter().enumerate() {
        state = state
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(splitmix64(p.wrapping_add(depth as u64 + 1)));
        state = splitmix64(state);
    }
    state
}

/// Generator for the work item addressed by `path` under the root `seed`.
pub fn derive_rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}
