//! Seeded random streams.
//!
//! Every chain and replicate owns a `ChaCha8Rng` whose seed is derived from a
//! master seed and a key path, so results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mix a master seed with a sequence of keys.
pub fn derive_seed(master: u64, keys: &[u64]) -> u64 {
    let mut h = splitmix(master);
    for &k in keys {
        h = splitmix(h ^ splitmix(k.wrapping_add(0x2545_F491_4F6C_DD1D)));
    }
    h
}

pub fn stream(master: u64, keys: &[u64]) -> Stream {
    ChaCha8Rng::seed_from_u64(derive_seed(master, keys))
}

pub fn from_seed(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}
