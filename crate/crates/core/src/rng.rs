//! Seeded random streams.
//!
//! Every stochastic step draws from its own ChaCha stream derived from the
//! run seed, so adding draws in one stage never shifts another stage.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers for the pipeline's stochastic steps.
pub mod stream {
    pub const BALANCE: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const FACTORIZE: u64 = 3;
    pub const OOV_CONTEXT: u64 = 4;
    pub const FOLDS: u64 = 5;
    pub const PLAN: u64 = 6;
    pub const GROUPS: u64 = 7;
    pub const DOWNSAMPLE: u64 = 8;
    pub const SYNTH: u64 = 9;
}

/// A ChaCha8 generator keyed by `seed` on the given stream.
pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Same as [`seeded`] but keyed additionally by `item`, used where each
/// item (a context, a word) needs its own generator.
pub fn seeded_item(seed: u64, stream: u64, item: u64) -> ChaCha8Rng {
    seeded(splitmix64(seed ^ splitmix64(item)), stream)
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fisher-Yates shuffle under `(seed, stream)`.
pub fn shuffle<T>(items: &mut [T], seed: u64, stream: u64) {
    let mut rng = seeded(seed, stream);
    items.shuffle(&mut rng);
}
