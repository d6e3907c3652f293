//! Deterministic random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for a top-level seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for item `index` under `seed`. Streams never overlap,
/// so per-sample results do not depend on evaluation order.
pub fn derived_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A child seed for nested derivations (e.g. a suite entry's own seed).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    use rand::RngCore;
    derived_rng(seed, index).next_u64()
}
