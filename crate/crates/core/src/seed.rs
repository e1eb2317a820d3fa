//! Deterministic seed derivation.
//!
//! Every Monte-Carlo loop in the crate draws from a generator seeded by a
//! [`SeedStream`] derived from the master seed and the loop index, so the
//! result never depends on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for all simulation work.
pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream(u64);

impl SeedStream {
    pub fn new(master: u64) -> Self {
        Self(master)
    }

    pub fn seed(self) -> u64 {
        self.0
    }

    /// Child stream for `index`. Distinct indices give unrelated streams.
    pub fn derive(self, index: u64) -> Self {
        Self(splitmix64(
            self.0 ^ splitmix64(index.wrapping_mul(GOLDEN_GAMMA) ^ 0xA5A5),
        ))
    }

    pub fn derive2(self, a: u64, b: u64) -> Self {
        self.derive(a).derive(b)
    }

    pub fn rng(self) -> SimRng {
        SimRng::seed_from_u64(self.0)
    }
}

impl From<u64> for SeedStream {
    fn from(master: u64) -> Self {
        Self::new(master)
    }
}

/// Stream labels used across modules so unrelated loops never share a child stream.
pub(crate) mod tags {
    pub const MC_BLOCK: u64 = 1;
    pub const CANDIDATE: u64 = 2;
    pub const BORDERLINE_MC: u64 = 3;
    pub const CONVERGENCE: u64 = 4;
    pub const DISTORTION: u64 = 5;
    pub const OPTIMAL_MC: u64 = 6;
    pub const DISTORTED_MC: u64 = 7;
    pub const REPETITION: u64 = 8;
    pub const LATENT_MU: u64 = 9;
    pub const LATENT_SIGMA: u64 = 10;
    pub const TRIALS: u64 = 11;
}
