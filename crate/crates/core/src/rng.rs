//! Reproducible random streams.
//!
//! Every replicate owns two ChaCha8 streams keyed by the master seed. The
//! stream id is `2 * replicate + kind`, with `kind = 0` for the Brownian
//! component and `kind = 1` for the compound Poisson component, so results
//! do not depend on the order in which replicates are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamKind {
    Brownian = 0,
    Jumps = 1,
}

/// Stream id for `(replicate, kind)`.
pub fn stream_id(replicate: u64, kind: StreamKind) -> u64 {
    (replicate << 1) | kind as u64
}

pub fn stream_rng(master_seed: u64, replicate: u64, kind: StreamKind) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id(replicate, kind));
    rng
}

/// The pair of generators driving one simulated replicate.
#[derive(Clone, Debug)]
pub struct ReplicateStreams {
    pub brownian: ChaCha8Rng,
    pub jumps: ChaCha8Rng,
}

impl ReplicateStreams {
    pub fn new(master_seed: u64, replicate: u64) -> Self {
        Self {
            brownian: stream_rng(master_seed, replicate, StreamKind::Brownian),
            jumps: stream_rng(master_seed, replicate, StreamKind::Jumps),
        }
    }
}
