//! Deterministic seed derivation.
//!
//! All randomness in a simulation flows from one run seed. Child streams are
//! derived as `hash64(parent, label)` (optionally mixed with integer parts
//! such as round and client id), so the shuffle stream, the noise stream and
//! the data generator never share state and thread scheduling cannot change
//! results.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// SplitMix64 finalizer, used as the mixing primitive for seed derivation.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a stream label.
pub fn hash64(base: u64, label: &str) -> u64 {
    let mut h = splitmix64(base ^ 0x6A09_E667_F3BC_C909);
    for &b in label.as_bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    h
}

/// Derive a child seed from a parent seed, a stream label, and integer parts.
pub fn hash64_with(base: u64, label: &str, parts: &[u64]) -> u64 {
    let mut h = hash64(base, label);
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    h
}

/// Seed shared by every stream of one (round, client) pair.
pub fn client_round_seed(run_seed: u64, round: u64, client_id: u64) -> u64 {
    hash64_with(run_seed, "client-round", &[round, client_id])
}

/// ChaCha20 stream for a labelled child seed.
pub fn rng_for(base: u64, label: &str, parts: &[u64]) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(hash64_with(base, label, parts))
}
