//! Seeded generator streams.
//!
//! Every run derives its generators from a single `u64` seed. Each consumer
//! (fundamental path, opinion switching, trading) gets its own ChaCha stream,
//! so changing how many draws one consumer makes never shifts another's
//! sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Fundamental = 1,
    Switching = 2,
    Trading = 3,
}

/// Generator for `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
