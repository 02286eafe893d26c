//! Named random substreams derived from one master seed.
//!
//! Each consumer draws from its own ChaCha stream (same key, distinct stream
//! id), so enabling or disabling one stage never shifts another stage's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stream {
    Data = 1,
    Noise = 2,
    SimnetInit = 3,
    SimnetBatches = 4,
    SimnetNovelBatches = 5,
    DiscInit = 6,
    ClassifierInit = 7,
    ClassifierBatches = 8,
    Pretrain = 9,
    Eval = 10,
}

pub fn substream(master: u64, stream: Stream) -> Rng {
    indexed_substream(master, stream, 0)
}

/// Like [`substream`], with an extra index for families of streams (e.g. one per study cell).
pub fn indexed_substream(master: u64, stream: Stream, index: u32) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((stream as u64) << 32) | index as u64);
    rng
}
