//! Deterministic seed derivation.
//!
//! Every random decision in the crate flows from a single master seed via
//! `derive_seed`, so training, generation, and sampling are reproducible and
//! independent of execution order (parallel or serial).

/// splitmix64 finalizer; good avalanche, cheap, stable across platforms.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a stream tag.
pub(crate) fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

/// Derive a child seed from a master seed and a string tag (e.g. machine id).
pub(crate) fn derive_seed_str(master: u64, tag: &str) -> u64 {
    // FNV-1a over the tag bytes, then mix with the master.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    derive_seed(master, h)
}
