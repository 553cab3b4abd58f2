//! Shared fixtures for the criterion benchmarks.

use expguard_core::primes::RsaModulus;
use expguard_core::{ModulusContext, Nat, Rng};

/// A unit base and a full-width exponent under a fresh RSA-style modulus.
pub struct Workload {
    pub ctx: ModulusContext,
    pub base: Nat,
    pub exponent: Nat,
}

impl Workload {
    pub fn new(bits: u64, seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let ctx = RsaModulus::generate(bits, &mut rng)
            .expect("bits ≥ 8")
            .context();
        let base = loop {
            let x = rng.nat_below(ctx.modulus());
            if ctx.is_unit(&x) {
                break x;
            }
        };
        let exponent = rng.bits(bits);
        Workload {
            ctx,
            base,
            exponent,
        }
    }
}
