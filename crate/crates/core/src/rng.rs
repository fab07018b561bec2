//! Seeded, splittable random streams.
//!
//! Every Monte Carlo trial owns a ChaCha8 stream keyed by
//! `(master seed, purpose tag, trial index)`, so results do not depend on
//! execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(tag.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Independent stream for one trial.
pub fn substream(master_seed: u64, tag: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, tag));
    rng.set_stream(trial);
    rng
}

/// Plain stream for one-off draws.
pub fn stream(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}
