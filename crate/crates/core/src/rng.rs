//! Seed derivation. Every random draw in an experiment comes from one root
//! seed split into named substreams, so the order in which components consume
//! randomness cannot leak between them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Data,
    Split,
    Sharding,
    Init,
    StochasticGradient,
    Augment,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Data => 0x6461_7461,
            Stream::Split => 0x7370_6c69,
            Stream::Sharding => 0x7368_6172,
            Stream::Init => 0x696e_6974,
            Stream::StochasticGradient => 0x7367_6164,
            Stream::Augment => 0x6175_676d,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of a named substream, optionally refined by integer coordinates
/// (node id, round, ...).
pub fn derive_seed(root: u64, stream: Stream, coords: &[u64]) -> u64 {
    let mut h = splitmix64(root ^ splitmix64(stream.tag()));
    for &c in coords {
        h = splitmix64(h ^ splitmix64(c.wrapping_add(0x5851_f42d_4c95_7f2d)));
    }
    h
}

pub fn substream(root: u64, stream: Stream, coords: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(root, stream, coords))
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
