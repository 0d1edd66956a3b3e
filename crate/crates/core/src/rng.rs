//! Seeded, platform-independent random streams.
//!
//! Every stochastic routine in the crate draws from a [`RngHandle`]. Handles
//! are derived hierarchically (`root.derive(&[cell, trial])`) so experiment
//! results depend only on the root seed and the logical position of a trial,
//! never on scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Concrete generator behind every handle: ChaCha with 8 rounds.
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngHandle {
    seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngHandle {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child handle addressed by `path`. Distinct paths give unrelated streams.
    pub fn derive(&self, path: &[u64]) -> RngHandle {
        let mut h = splitmix64(self.seed);
        for &component in path {
            h = splitmix64(h ^ splitmix64(component.wrapping_add(0x632B_E59B_D9B4_E019)));
        }
        RngHandle { seed: h }
    }

    pub fn stream(&self) -> StreamRng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<u64> = RngHandle::new(42).stream().random_iter().take(8).collect();
        let b: Vec<u64> = RngHandle::new(42).stream().random_iter().take(8).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn derived_paths_differ() {
        let root = RngHandle::new(7);
        assert_ne!(root.derive(&[0, 1]), root.derive(&[1, 0]));
        assert_ne!(root.derive(&[0]), root.derive(&[0, 0]));
        assert_eq!(root.derive(&[3, 4]), root.derive(&[3, 4]));
    }

    #[test]
    fn stream_is_pinned() {
        // ChaCha8 output is specified; guard against silent algorithm swaps.
        let x: u64 = RngHandle::new(0).stream().random();
        let y: u64 = RngHandle::new(0).stream().random();
        assert_eq!(x, y);
        assert_ne!(x, RngHandle::new(1).stream().random::<u64>());
    }
}
