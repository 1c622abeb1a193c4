//! Seed derivation. Every random stream in the pipeline is keyed by
//! `(root seed, stage name, item id)` so that serial and parallel runs draw
//! identical numbers for the same item.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn stage_hash(stage: &str) -> u64 {
    stage
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Derive a sub-seed for one item of one stage.
pub fn derive_seed(seed: u64, stage: &str, id: u64) -> u64 {
    let h = splitmix64(seed ^ stage_hash(stage));
    splitmix64(h ^ splitmix64(id))
}

/// RNG stream for one item of one stage.
pub fn stream(seed: u64, stage: &str, id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stage, id))
}
