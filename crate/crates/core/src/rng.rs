//! Seed derivation. Every random stream in a run descends from one root seed
//! through a named sub-stream and an index, so strategies compared on the same
//! example see the same draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type EpisodeRng = ChaCha8Rng;

/// Named sub-streams of a root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    World,
    Dataset,
    Episodes,
    Splits,
    Binding,
    Ledgers,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::World => 0x5752_4c44,
            Stream::Dataset => 0x4441_5441,
            Stream::Episodes => 0x4550_4953,
            Stream::Splits => 0x5350_4c54,
            Stream::Binding => 0x4249_4e44,
            Stream::Ledgers => 0x4c45_4447,
        }
    }
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a 64-bit seed for `index` within `stream` of `root`.
pub fn derive_seed(root: u64, stream: Stream, index: u64) -> u64 {
    mix(mix(mix(root) ^ stream.tag()) ^ index)
}

/// A fresh generator for `index` within `stream` of `root`.
pub fn stream_rng(root: u64, stream: Stream, index: u64) -> EpisodeRng {
    EpisodeRng::seed_from_u64(derive_seed(root, stream, index))
}

/// The generator owned by one classification episode.
pub fn episode_rng(root: u64, example_index: u64) -> EpisodeRng {
    stream_rng(root, Stream::Episodes, example_index)
}
