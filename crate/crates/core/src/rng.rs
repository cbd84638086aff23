//! Seed derivation.
//!
//! Every stochastic routine takes an explicit generator. Runs derive all
//! generators from one master seed by hashing `(master, stream, index)`
//! with SplitMix64, so worker `w`, episode `e` and turn `t` streams are
//! independent of scheduling:
//!
//! * worker stream:  `derive(master, WORKER, w)`
//! * episode stream: `derive(worker_seed, EPISODE, e)`
//! * turn stream:    `derive(episode_seed, TURN, t)`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type GameRng = ChaCha8Rng;

pub const WORKER: u64 = 1;
pub const EPISODE: u64 = 2;
pub const TURN: u64 = 3;
pub const MATCH_GAME: u64 = 4;
pub const TRAINER: u64 = 5;
pub const PRETRAIN: u64 = 6;
pub const STATE: u64 = 7;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix(splitmix(seed ^ splitmix(stream)) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

pub fn rng_from(seed: u64) -> GameRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(seed: u64, stream: u64, index: u64) -> GameRng {
    rng_from(derive(seed, stream, index))
}

/// Stable 64-bit FNV-1a hash, used to key per-state streams.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}
