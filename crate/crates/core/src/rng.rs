//! Deterministic seed derivation for parallel replicas.
//!
//! Every consumer derives its generator by hashing (master seed, stream
//! index), so replicas can be scheduled in any order on any number of
//! workers and still see identical streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child generator for `(master, stream)`.
pub fn child_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let key = splitmix64(master ^ splitmix64(stream));
    ChaCha8Rng::seed_from_u64(key)
}
