//! Deterministic RNG stream derivation.
//!
//! Every randomized component derives its generator from a base seed plus a
//! path of integer tags, so results do not depend on evaluation order or on
//! how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tag for chain permutation streams.
pub const TAG_PERMUTATION: u64 = 0x5045_524d;
/// Tag for per-member forest seeds inside BR/ECC.
pub const TAG_MEMBER: u64 = 0x4d45_4d42;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `tags` into `seed`, producing an independent-looking child seed.
pub fn derive(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |h, &t| splitmix64(h ^ splitmix64(t.wrapping_add(0x632b_e59b_d9b4_e019))))
}

/// Generator for `seed`.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for `seed` on stream `stream`; streams never overlap.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Seed of the forest at chain `chain`, position `position`.
///
/// Binary relevance uses chain 0, so with one class a BR model, a one-chain
/// ECC model and a plain forest seeded with `member_seed(seed, 0, 0)` are
/// the same forest.
pub fn member_seed(seed: u64, chain: usize, position: usize) -> u64 {
    derive(seed, &[TAG_MEMBER, chain as u64, position as u64])
}
