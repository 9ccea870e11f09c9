//! Counter-based random streams.
//!
//! Every stochastic gradient draws from its own stream addressed by
//! `(seed, node, round, step)`. Nothing is shared between nodes, so the
//! simulator produces the same bits whatever order (or thread) the node
//! loops run in, and any single step can be replayed in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PROBLEM_DOMAIN: u64 = 0x7072_6f62_6c65_6d00;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream for the gradient noise of `node` at local `step` of `round`.
pub fn substream(seed: u64, node: u64, round: u64, step: u64) -> ChaCha8Rng {
    let key = mix64(mix64(mix64(seed) ^ node) ^ round);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(step);
    rng
}

/// Stream used to draw random problem instances.
pub fn problem_stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed ^ PROBLEM_DOMAIN))
}
