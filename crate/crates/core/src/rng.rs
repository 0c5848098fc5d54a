//! Keyed random streams.
//!
//! Every random draw in a run is derived from the single top-level seed plus a
//! tuple of integers naming *where* the draw happens (stream tag, iteration,
//! interval, coordinate, restart, ...). Draws therefore never depend on the
//! order in which work items are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Distinct tags keep unrelated consumers from sharing draws.
pub mod stream {
    pub const GP_RESTART: u64 = 0x6770_7273;
    pub const NEIGHBOUR_TIE: u64 = 0x7469_6573;
    pub const SUBSET_FILL: u64 = 0x6669_6c6c;
    pub const INITIAL_CONDITION: u64 = 0x7530_7530;
    pub const RUN: u64 = 0x7275_6e73;
}

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `seed`, one mixing round per part.
pub fn derive_key(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix64(seed), |acc, &p| mix64(acc ^ mix64(p)))
}

/// A ChaCha stream addressed by `(seed, parts)`.
pub fn keyed_rng(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_key(seed, parts))
}
