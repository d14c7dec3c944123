//! Deterministic random substreams.
//!
//! All randomness in an experiment flows from one top-level seed. Named
//! substreams (`"train"`, `"eval"`, `"probe"`, ...) plus integer indices
//! (SNR index, frame index) are mixed into independent ChaCha streams, so
//! per-frame samples depend only on `(seed, domain, indices)` and never on
//! worker count or batch layout.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; used as the mixing step when absorbing seed material.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives an independent random stream from `(seed, domain, indices)`.
///
/// The same inputs always produce the same stream, on any platform.
pub fn substream(seed: u64, domain: &str, indices: &[u64]) -> ChaCha8Rng {
    let mut state = mix(seed ^ 0x9e37_79b9_7f4a_7c15);
    state = mix(state ^ fnv1a(domain.as_bytes()));
    for &idx in indices {
        state = mix(state ^ idx);
    }
    let mut key = [0u8; 32];
    let mut x = state;
    for chunk in key.chunks_exact_mut(8) {
        x = mix(x.wrapping_add(0x9e37_79b9_7f4a_7c15));
        chunk.copy_from_slice(&x.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
