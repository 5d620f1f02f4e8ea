//! Reproducible random streams.
//!
//! Every stochastic routine takes a master seed and a task index. The pair
//! selects a ChaCha8 keystream: the seed fixes the key and the task index
//! fixes the stream id, so task `i` draws the same numbers no matter how many
//! other tasks run or in which order they are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Generator for `(seed, task)`.
pub fn substream(seed: u64, task: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(task);
    rng
}

/// Derive a child seed from a parent seed and a label, for nesting
/// (e.g. ensemble member `i` of grid cell `j`).
pub fn derive_seed(seed: u64, task: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = seed ^ task.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
