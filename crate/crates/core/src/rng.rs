//! Named random sub-streams.
//!
//! Every random decision in an experiment is drawn from a ChaCha stream keyed
//! by the experiment seed, a [`Stream`] name and an index (usually the AL
//! iteration), so any one component can be replayed without the others.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent purposes that consume randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Seeding = 1,
    Induction = 2,
    Pruning = 3,
    Training = 4,
    CrossValidation = 5,
    Acquisition = 6,
    Synthetic = 7,
}

/// Derive a 64-bit seed for `(base, stream, index)`.
pub fn derive_seed(base: u64, stream: Stream, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream as u64);
    // two 32-bit words per u64 output
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

/// A generator for `(base, stream, index)`.
pub fn stream_rng(base: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, stream, index))
}

/// A generator seeded directly.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
