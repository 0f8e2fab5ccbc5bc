//! Seeded, portable random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream type used by every simulation; identical output on all platforms.
pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Bijective 64-bit finalizer (MurmurHash3 `fmix64`).
pub fn fmix64(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^= x >> 33;
    x = x.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    x ^= x >> 33;
    x
}

/// Replica seed as a pure function of the sweep's base seed, the grid point
/// index and the replica index.
///
/// Injective in `(point, replica)` for indices below `2^32` at a fixed base.
pub fn derive_seed(base: u64, point: u32, replica: u32) -> u64 {
    let key = ((point as u64) << 32) | replica as u64;
    fmix64(key ^ fmix64(base))
}
