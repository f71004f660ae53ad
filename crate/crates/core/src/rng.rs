//! SplitMix64, a counter-based 64-bit generator.
//!
//! The `k`-th output (0-based) for seed `s` is `mix(s + (k + 1) * GAMMA)` with
//!
//! ```text
//! GAMMA = 0x9E37_79B9_7F4A_7C15
//! mix(z): z = (z ^ (z >> 30)) * 0xBF58_476D_1CE4_E5B9
//!         z = (z ^ (z >> 27)) * 0x94D0_49BB_1331_11EB
//!         z ^ (z >> 31)
//! ```
//!
//! with wrapping 64-bit arithmetic throughout. Everything seeded in this crate
//! (random designs, restart seeds) is defined in terms of this sequence, so
//! results can be reproduced bit-for-bit on any platform or in any language.

pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX2: u64 = 0x94D0_49BB_1331_11EB;

#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX2);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Random-access form: the `k`-th output of the stream started at `seed`.
    pub fn nth_output(seed: u64, k: u64) -> u64 {
        mix(seed.wrapping_add(k.wrapping_add(1).wrapping_mul(GAMMA)))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// ±1 from the top bit of the next output (set ⇒ +1).
    pub fn next_sign(&mut self) -> i8 {
        if self.next() >> 63 == 1 {
            1
        } else {
            -1
        }
    }
}

/// Seed for restart `index` of a multi-restart run seeded with `seed`.
pub fn restart_seed(seed: u64, index: u64) -> u64 {
    SplitMix64::nth_output(seed, index)
}
