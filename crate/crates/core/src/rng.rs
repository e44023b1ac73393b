//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream keyed by
//! a user seed and a stream number. ChaCha is counter-based: stream `s` of
//! seed `k` is the same bit sequence on every platform and does not depend
//! on which other streams were consumed, or in what order, so replicate `r`
//! of a bootstrap or row `i` of a generated panel can be computed on any
//! thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent stream `stream` derived from `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
