//! Seedable randomness plumbing.
//!
//! Every operation in this crate draws randomness from an injected
//! [`ForgeRng`]; nothing reads ambient entropy. Parallel work forks
//! per-task streams with [`fork_stream`], keyed by `(epoch, index)`, so a
//! population evaluated on eight workers sees exactly the same randomness
//! as one evaluated on a single thread.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// The crate-wide RNG handle.
pub type ForgeRng = ChaCha20Rng;

/// Builds the master RNG for a run.
pub fn seed_rng(seed: u64) -> ForgeRng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Forks an independent stream for the parallel task `(epoch, index)`.
///
/// The derivation is pure, so results are schedule-independent.
pub fn fork_stream(seed: u64, epoch: u64, index: u64) -> ForgeRng {
    let mut state = splitmix64(seed)
        ^ splitmix64(epoch.wrapping_mul(0xA076_1D64_78BD_642F))
        ^ splitmix64(index.wrapping_mul(0xE703_7ED1_A0B4_28DB));
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha20Rng::from_seed(key)
}
