//! Counter-based uniform draws: trial `t` of a stream keyed by `seed` always
//! reads the same two ChaCha words, whichever thread evaluates it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Words of keystream consumed per trial (one `u64`).
const WORDS_PER_TRIAL: u128 = 2;

/// Uniform `[0, 1)` draws for a contiguous range of trial indices.
pub struct TrialStream {
    rng: ChaCha8Rng,
}

impl TrialStream {
    /// Positions the stream at `first_trial`.
    pub fn new(seed: u64, first_trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(first_trial as u128 * WORDS_PER_TRIAL);
        Self { rng }
    }

    /// Draw for the next trial in sequence.
    pub fn next_uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}
