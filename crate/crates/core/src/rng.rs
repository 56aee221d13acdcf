//! Reproducible random streams.
//!
//! Every random task draws from a ChaCha8 generator keyed by the user seed
//! with its own stream id, so the output of a task never depends on how many
//! other tasks ran before it or on which thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for task `task` under `seed`.
pub fn stream(seed: u64, task: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(task);
    rng
}

/// Combine a parent stream id with a child index into a new stream id.
pub fn substream(parent: u64, child: u64) -> u64 {
    splitmix64(parent ^ splitmix64(child.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
