//! Deterministic pseudorandom streams.
//!
//! The generator is xoshiro256** (Blackman & Vigna), seeded by expanding a
//! 64-bit seed through SplitMix64. Uniform doubles take the top 53 bits of a
//! draw, giving values in `[0, 1)`. Normal variates use the basic Box–Muller
//! transform on the two 32-bit halves of a single draw (high half for the
//! radius, low half for the angle; the sine branch is discarded), so every
//! uniform and every normal costs exactly one 64-bit draw.
//!
//! Everything here is integer arithmetic plus `ln`, `sqrt` and `cos`, so a
//! given seed produces the same stream on every platform with IEEE-754 `f64`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One step of SplitMix64. Returns the output and advances `state`.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rng {
    s: [u64; 4],
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Self { s }
    }

    /// Independent stream `stream` under a master `seed`.
    ///
    /// Used to give the data generator, the test set, each model's weight
    /// init, and each model's shuffler their own streams, so adding draws to
    /// one never shifts another.
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut sm = seed ^ stream.wrapping_mul(GOLDEN_GAMMA).rotate_left(17);
        Self::new(splitmix64(&mut sm))
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform on `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[low, high)`.
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.next_f64()
    }

    /// Standard normal variate (Box–Muller, cosine branch), one draw.
    pub fn normal(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 32) as f64;
        let bits = self.next_u64();
        // u1 in (0, 1] so ln never sees zero; u2 in [0, 1).
        let u1 = 1.0 - (bits >> 32) as f64 * SCALE;
        let u2 = (bits & 0xFFFF_FFFF) as f64 * SCALE;
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    /// Uniform index in `0..n` by rejection, free of modulo bias.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let r = self.next_u64();
            if r < zone {
                return (r % n) as usize;
            }
        }
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
