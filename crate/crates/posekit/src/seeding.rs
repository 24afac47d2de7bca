//! Deterministic derivation of sub-seeds from one master seed.
//!
//! Categories, epochs and synthetic draws each get their own stream so
//! reordering one loop never perturbs another. The mix is a splitmix64
//! pass over the master seed and two salts.

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Sub-seed for the stream identified by `(domain, index)`.
pub fn mix(seed: u64, domain: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(domain.wrapping_shl(32) ^ index))
}
