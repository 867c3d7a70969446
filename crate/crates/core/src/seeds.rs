//! Seed-splitting discipline.
//!
//! Every randomised operation takes one 64-bit master seed and derives
//! independent ChaCha streams from it: stream 0 for the operation's own
//! draws, streams 1.. for per-sample or per-worker substreams.  Results
//! are therefore reproducible bit-for-bit regardless of thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for `stream` derived from `master`.
pub fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}
