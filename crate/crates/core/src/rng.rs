//! Seeded random streams.
//!
//! Replication `i` of a run with root seed `s` draws from ChaCha8 seeded with
//! `mix64(mix64(s) + i)`, where `mix64` is the splitmix64 finalizer. Streams
//! for different `i` are therefore unrelated, and a run is reproducible from
//! `(s, i)` alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream_seed(root: u64, index: u64) -> u64 {
    mix64(mix64(root).wrapping_add(index))
}

pub fn stream_rng(root: u64, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(stream_seed(root, index))
}
