//! Purpose-keyed random streams.
//!
//! Every source of environment randomness gets its own generator derived from
//! `(run seed, purpose, index)`. Nothing is keyed by scheduler rule, so two
//! runs that differ only in the rule see the same mobility, shadowing, fading
//! and placement draws.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    Mobility = 1,
    Shadowing = 2,
    Fading = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for one `(purpose, index)` pair of a run.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> StreamRng {
    let key = splitmix64(splitmix64(seed) ^ ((purpose as u64) << 56)) ^ splitmix64(index.wrapping_add(0xA5A5));
    StreamRng::seed_from_u64(splitmix64(key))
}
