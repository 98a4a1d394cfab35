//! Random number generation and seed derivation.
//!
//! Every stochastic component draws from [`SimRng`], a xoshiro256++ generator.
//! Seeds are derived with SplitMix64 so that a `(master seed, run index,
//! stream)` triple maps to the same generator state in any language:
//!
//! ```text
//! run_seed(master, i)        = splitmix64(master ^ splitmix64(i))
//! stream_seed(run, stream)   = splitmix64(run ^ splitmix64(stream + 0x51))
//! state words                = four successive splitmix64 outputs from the seed
//! ```

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// The pinned generator used throughout the crate.
pub type SimRng = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 output for the state `x` (state advanced by the golden gamma first).
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index` under `master`.
pub fn run_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// Independent sub-streams of a single run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Reward and duel draws.
    Environment,
    /// Internal randomness of the policy owned by agent `i` (the leader uses 0).
    Policy(u64),
    /// Uniform warm-up plays of followers and other protocol coin flips.
    Protocol,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Environment => 0,
            Stream::Protocol => 1,
            Stream::Policy(i) => 2 + i,
        }
    }
}

/// Seed for `stream` inside the run seeded by `run`.
pub fn stream_seed(run: u64, stream: Stream) -> u64 {
    splitmix64(run ^ splitmix64(stream.tag().wrapping_add(0x51)))
}

/// Builds a generator whose four state words are successive SplitMix64 outputs.
pub fn rng_from_seed(seed: u64) -> SimRng {
    let mut state = seed;
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_exact_mut(8) {
        let word = splitmix64(state);
        state = state.wrapping_add(GOLDEN_GAMMA);
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    SimRng::from_seed(bytes)
}

/// Generator for `stream` of the run seeded by `run`.
pub fn stream_rng(run: u64, stream: Stream) -> SimRng {
    rng_from_seed(stream_seed(run, stream))
}
