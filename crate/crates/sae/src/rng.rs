//! Counter-based random substreams for the study engine.
//!
//! Every random quantity in a study is drawn from its own stream, keyed by
//! `(master_seed, replicate, area, tag)`. The key is mixed through a
//! splitmix64 chain into a 32-byte ChaCha8 seed, so any substream can be
//! reconstructed independently of every other — results are bit-identical
//! no matter how replicates are scheduled across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which random variable of an area a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    /// The area-level random effect `v_i`.
    AreaEffect = 0,
    /// The sampling error `e_i`.
    SamplingError = 1,
}

/// splitmix64: advance the state by the golden-ratio increment and return
/// the mixed output.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold one key coordinate into the chain state.
fn absorb(state: u64, value: u64) -> u64 {
    let mut s = state ^ value.wrapping_mul(0xA24B_AED4_963E_E407);
    splitmix64(&mut s)
}

/// Deterministic generator for the stream keyed by
/// `(master_seed, replicate, area, tag)`.
pub fn substream(master_seed: u64, replicate: u64, area: u64, tag: StreamTag) -> ChaCha8Rng {
    let mut state = {
        let mut s = master_seed;
        splitmix64(&mut s)
    };
    state = absorb(state, replicate);
    state = absorb(state, area);
    state = absorb(state, tag as u64);
    let mut seed = [0u8; 32];
    let mut s = state;
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
