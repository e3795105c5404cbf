//! Deterministic RNG stream derivation.
//!
//! Every random decision in a run draws from its own ChaCha8 stream, keyed by
//! `(master seed, purpose, iteration, entity)`. No stream is ever shared
//! between purposes or entities, so per-user work can run in any order, or in
//! parallel on any number of threads, without changing a single draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Each purpose gets draws disjoint from every
/// other purpose, even at the same `(iteration, entity)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamKind {
    /// Initial user positions and the initial creator assignment.
    Init,
    /// Role churn decisions (one stream per iteration).
    Churn,
    /// Content production coin flips (one stream per iteration).
    Production,
    /// Per-user draw of the recommendation set size `k`.
    KDraw,
    /// Per-user movement noise.
    Noise,
}

impl StreamKind {
    fn tag(self) -> u64 {
        match self {
            StreamKind::Init => 0x01,
            StreamKind::Churn => 0x02,
            StreamKind::Production => 0x03,
            StreamKind::KDraw => 0x04,
            StreamKind::Noise => 0x05,
        }
    }
}

/// Factory for the independent streams of one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngPolicy {
    master_seed: u64,
}

impl RngPolicy {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// The stream for `(kind, iteration, entity)`. Derivation hashes the key
    /// tuple into a 256-bit ChaCha8 seed; the same tuple always yields the
    /// same stream.
    pub fn stream(&self, kind: StreamKind, iteration: u64, entity: u64) -> ChaCha8Rng {
        let mut x = mix(self.master_seed ^ 0x6A09_E667_F3BC_C908);
        x = mix(x ^ kind.tag().wrapping_mul(0x9E37_79B9_7F4A_7C15));
        x = mix(x ^ iteration.wrapping_mul(0xD134_2543_DE82_EF95));
        x = mix(x ^ entity.wrapping_mul(0xA076_1D64_78BD_642F));

        let mut seed = [0u8; 32];
        let mut state = x;
        for chunk in seed.chunks_exact_mut(8) {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            chunk.copy_from_slice(&mix(state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

/// splitmix64 finalizer.
pub(crate) fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
