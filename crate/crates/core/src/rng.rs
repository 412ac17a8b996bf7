//! Seeded, reproducible random streams.
//!
//! Every stochastic operation draws from a ChaCha8 stream fixed by an
//! explicit seed. Replicate `r` of an experiment with seed `s` uses stream
//! `r` of the generator seeded with `s`, so replicates can run in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SbmRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SbmRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for replicate `index` under `seed`.
pub fn derived(seed: u64, index: u64) -> SbmRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}
