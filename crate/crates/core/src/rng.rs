//! Seeded, splittable random streams.
//!
//! Every trial draws from `ChaCha8Rng::seed_from_u64(seed)` with its own
//! 64-bit stream id, so results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for the given seed and stream id.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream id for a tuple of labels (grid point, trial index, purpose...).
pub fn derive_stream(labels: &[u64]) -> u64 {
    labels.iter().fold(0x6A09_E667_F3BC_C908, |acc, &x| {
        splitmix64(acc ^ splitmix64(x))
    })
}

/// Generator for a labelled substream of `seed`.
pub fn substream(seed: u64, labels: &[u64]) -> ChaCha8Rng {
    stream_rng(seed, derive_stream(labels))
}
