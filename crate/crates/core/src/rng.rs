//! Counter-keyed random substreams.
//!
//! Every consumer of randomness derives its generator from `(seed, domain, index)`,
//! so work split across threads draws the same numbers as a sequential loop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Substream domains. Values are part of the reproducibility contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    EmRestart = 1,
    GoodPoint = 2,
    OutlierPoint = 3,
    SeparationReplicate = 4,
    Trial = 5,
}

pub fn substream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 48) ^ index);
    rng
}
