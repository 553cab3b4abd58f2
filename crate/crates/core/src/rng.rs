//! Deterministic simulation randomness.
//!
//! The generator is xoshiro256** whose 256-bit state is filled by four
//! successive SplitMix64 outputs of the 64-bit seed. Both recurrences are
//! short and published, so any language can reproduce a campaign bit for
//! bit. Derived quantities use the following fixed rules:
//!
//! * `below(b)`: draw `next_u64() & (2^⌈log2 b⌉ − 1)`, reject values `≥ b`;
//!   `below(1)` returns 0 without consuming output.
//! * `bits(n)`: `⌈n/64⌉` words, least significant first, top word masked.
//! * `nat_below(B)`: `bits(bit_length(B))`, reject values `≥ B`.
//! * `full_width(n)`: `2^(n−1) + bits(n−1)`.
//! * `distinct_positions(k, w)`: Floyd's subset sampling.
//!
//! None of this is suitable for production key material. Real deployments
//! must draw encoding coefficients from a cryptographically secure source.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::Nat;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function (the finalizer applied after adding the gamma).
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct Rng(Xoshiro256StarStar);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(Xoshiro256StarStar::seed_from_u64(seed))
    }

    /// Seed for a sub-stream identified by `path`:
    /// `h = mix64(seed + γ)`, then `h = mix64((h ^ w) + γ)` for each word.
    pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
        path.iter()
            .fold(mix64(seed.wrapping_add(GOLDEN_GAMMA)), |h, &w| {
                mix64((h ^ w).wrapping_add(GOLDEN_GAMMA))
            })
    }

    pub fn derive(seed: u64, path: &[u64]) -> Self {
        Rng::new(Rng::derive_seed(seed, path))
    }

    /// Independent child generator seeded from the next output of `self`.
    pub fn fork(&mut self) -> Self {
        Rng::new(self.next_u64())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, bound)`. `bound` must be nonzero.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        if bound == 1 {
            return 0;
        }
        let mask = u64::MAX >> (bound - 1).leading_zeros();
        loop {
            let v = self.next_u64() & mask;
            if v < bound {
                return v;
            }
        }
    }

    /// Uniform in `[0, 2^n)`.
    pub fn bits(&mut self, n: u64) -> Nat {
        if n == 0 {
            return Nat::default();
        }
        let words = n.div_ceil(64) as usize;
        let mut digits = Vec::with_capacity(words * 2);
        for i in 0..words {
            let mut w = self.next_u64();
            if i == words - 1 && !n.is_multiple_of(64) {
                w &= (1u64 << (n % 64)) - 1;
            }
            digits.push(w as u32);
            digits.push((w >> 32) as u32);
        }
        BigUint::new(digits)
    }

    /// Uniform in `[0, bound)`. `bound` must be nonzero.
    pub fn nat_below(&mut self, bound: &Nat) -> Nat {
        assert!(bound.bits() > 0, "empty range");
        let n = bound.bits();
        loop {
            let v = self.bits(n);
            if &v < bound {
                return v;
            }
        }
    }

    /// Uniform in `[2^(n−1), 2^n)`: exactly `n` bits with the top bit set.
    pub fn full_width(&mut self, n: u64) -> Nat {
        assert!(n > 0, "zero-width value");
        self.bits(n - 1) | (Nat::from(1u8) << (n - 1))
    }

    /// `k` distinct positions drawn uniformly from `[0, width)`, ascending.
    pub fn distinct_positions(&mut self, k: u64, width: u64) -> Vec<u64> {
        assert!(
            k <= width,
            "cannot draw {k} distinct positions from {width}"
        );
        let mut chosen = BTreeSet::new();
        for j in (width - k)..width {
            let t = self.below(j + 1);
            if !chosen.insert(t) {
                chosen.insert(j);
            }
        }
        chosen.into_iter().collect()
    }
}
