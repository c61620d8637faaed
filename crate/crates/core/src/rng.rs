//! Counter-style random stream derivation.
//!
//! Every random draw in a simulation comes from a ChaCha stream keyed by
//! `(master seed, trial)` and selected by a stream id (bit source or noise
//! channel). Streams never share state, so results do not depend on the
//! order or thread in which trials and channels are generated.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Random payload bits.
    Bits,
    /// Additive noise on sensor channel `i`.
    Noise(usize),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Bits => u64::MAX,
            Stream::Noise(ch) => ch as u64,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for `(seed, trial, stream)`.
pub fn substream(seed: u64, trial: u64, stream: Stream) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    let mut state = splitmix64(seed) ^ splitmix64(trial.rotate_left(32) ^ 0xA076_1D64_78BD_642F);
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(stream.id());
    rng
}

/// Seed for the `index`-th independent run derived from a master seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}
