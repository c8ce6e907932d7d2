//! Seeded generators shared by the whole crate.
//!
//! Every stochastic component draws from [`Pcg32`] (PCG-XSH-RR with 64-bit
//! state and a 64-bit stream selector), seeded through [`seeded`]. The
//! algorithm is fully specified so results are bit-reproducible on every
//! platform.

use rand::SeedableRng;
pub use rand_pcg::Pcg32;

/// SplitMix64 finaliser, used to decorrelate derived seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and a stream label.
pub fn derive(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream))
}

pub fn seeded(seed: u64) -> Pcg32 {
    Pcg32::seed_from_u64(seed)
}
