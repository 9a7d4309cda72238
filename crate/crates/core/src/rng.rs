//! Seeded, labeled random streams.
//!
//! Every consumer of randomness draws from a ChaCha stream keyed by the run
//! seed and a purpose label, so initialization, training batches and
//! validation sets never share draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init,
    Train,
    Validation,
    Evaluation,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Init => 1,
            Stream::Train => 2,
            Stream::Validation => 3,
            Stream::Evaluation => 4,
        }
    }
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
