//! Deterministic RNG streams.
//!
//! Every Monte-Carlo trial owns a ChaCha stream derived from a base seed and
//! the trial's position, so results do not depend on how trials are
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for trial `trial` of parameter point `point`.
pub fn trial_rng(base: u64, point: u32, trial: u32) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(((point as u64) << 32) | trial as u64);
    rng
}
