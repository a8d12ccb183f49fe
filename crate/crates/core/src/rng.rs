//! Seeded randomness. Every random draw in the crate goes through a ChaCha
//! stream derived from a named seed so runs are reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent child stream of `seed` for a named purpose.
pub fn derive(seed: u64, stream: &str) -> Rng {
    // FNV-1a over the stream name, mixed with the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stream.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ h.rotate_left(17));
    rng.set_stream(h);
    rng
}
