//! Single root seed expanded into independent per-phase seeds.
//!
//! Every stochastic site in a run (data synthesis, parameter init, noise
//! draws, buffer sampling, …) derives its own seed from the root via a
//! label + counter, so any one phase can be replayed in isolation and no
//! two phases share RNG state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Final mixing step; full-period bijection on u64 with good avalanche.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives per-phase seeds from one root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSplitter {
    root: u64,
}

impl SeedSplitter {
    pub fn new(root: u64) -> Self {
        SeedSplitter { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// Seed for phase `label`, occurrence `counter` (e.g. domain index).
    pub fn derive(&self, label: &str, counter: u64) -> u64 {
        let mut h = FNV_OFFSET;
        for b in label.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        h ^= counter;
        h = h.wrapping_mul(FNV_PRIME);
        splitmix64(self.root ^ splitmix64(h))
    }

    /// Deterministic stream RNG for phase `label` / `counter`.
    pub fn rng(&self, label: &str, counter: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.derive(label, counter))
    }
}
