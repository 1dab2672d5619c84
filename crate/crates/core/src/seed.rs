//! Splittable seed derivation.
//!
//! Every stochastic operation in the crate takes an explicit `u64` seed and
//! derives independent streams with [`derive_seed`]. Replicate `r` of a run
//! seeded with `s` always uses `derive_seed(s, r)`, so results do not depend
//! on worker count or execution order.

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed for stream `index` of the generator seeded with `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index.wrapping_add(1)))
}
