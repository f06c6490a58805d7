//! Seed derivation.
//!
//! Every random consumer gets its own ChaCha stream derived from a base seed
//! and a tuple of counters (member index, subsample index, play index, ...),
//! so results never depend on the order in which parallel work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep streams used for different purposes apart even when
/// they share a base seed and counters.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum Purpose {
    Split = 1,
    Subsample = 2,
    Bootstrap = 3,
    BootDraw = 4,
    TestSubsample = 5,
    Catalytic = 6,
    Gbdt = 7,
    Synth = 8,
    Tune = 9,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a seed, a purpose tag and any number of counters into one 64-bit key.
pub fn derive_seed(seed: u64, purpose: Purpose, counters: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ splitmix64(purpose as u64));
    for &c in counters {
        h = splitmix64(h ^ splitmix64(c.wrapping_add(0xA076_1D64_78BD_642F)));
    }
    h
}

pub fn stream(seed: u64, purpose: Purpose, counters: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, purpose, counters))
}
