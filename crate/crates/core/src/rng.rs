//! Counter-based keyed RNG streams.
//!
//! Every random column in the crate (sketch operator columns, generated
//! right-hand-side columns) draws from its own ChaCha stream keyed by
//! `(seed, tag, column)`. Output is therefore independent of the order
//! in which columns are produced and reproducible across platforms.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const TAG_GAUSSIAN: u64 = 0x47415553; // "GAUS"
pub(crate) const TAG_SPARSE_SIGN: u64 = 0x5347_4e53; // "SGNS"
pub(crate) const TAG_RHS: u64 = 0x5248_53;
pub(crate) const TAG_XSTAR: u64 = 0x5853_5452;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha generator for stream `index` of the `(seed, tag)` family,
/// positioned at the start of the stream.
pub(crate) fn keyed_rng(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng.set_word_pos(0);
    rng
}
