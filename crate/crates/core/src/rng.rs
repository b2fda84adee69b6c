//! Seeded random sources.
//!
//! Every parallel task owns its own generator, addressed by a `(seed, stream)`
//! pair. ChaCha8 has a native 64-bit stream parameter, so distinct streams of
//! the same seed never overlap and a given pair reproduces bit-for-bit on any
//! thread schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a base seed with a path of integer keys (cell index, replication,
/// role tag, ...) into a fresh seed. SplitMix64 finalizer per step.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut state = base;
    for &key in path {
        state = splitmix(state ^ splitmix(key.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    state
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
