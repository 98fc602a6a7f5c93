//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator keyed by the run's
//! master seed, with the stream number selecting the trajectory (or sweep
//! point). Because the keystream of `(seed, stream)` does not depend on which
//! thread consumes it, results are identical for any degree of parallelism.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for trajectory `index` under `master`.
pub fn stream_rng(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Independent child master seed, e.g. for one point of a parameter sweep.
///
/// Child seeds come from a reserved stream so they never coincide with the
/// keystream of a trajectory of the same master.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(u64::MAX);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}
