//! Seeded, portable random streams.
//!
//! Every consumer of randomness derives its own ChaCha8 generator from the
//! run seed and a fixed stream tag, so adding draws in one place never
//! perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier written into run metadata.
pub const RNG_ALGORITHM: &str = "chacha8+splitmix64";

pub type SimRng = ChaCha8Rng;

/// Stream tags. Values are part of the reproducibility contract.
pub mod stream {
    pub const MAPGEN_OCTAVES: u64 = 0x10;
    pub const MAPGEN_LAYER: u64 = 0x11;
    pub const SPAWN: u64 = 0x20;
    pub const CHANNEL_NOISE: u64 = 0x30;
    pub const POLICY: u64 = 0x40;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a stream tag and an index into a fresh seed.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn stream_rng(seed: u64, stream: u64, index: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, index))
}
