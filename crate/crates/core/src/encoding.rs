//! Randomized input encodings that need no decoding step.
//!
//! `x + k·N ≡ x (mod N)` and, for units, `x^(y + k·φ(N)) ≡ x^y (mod N)`.
//! Each round encodes with its own coefficients so the two rounds feed
//! different bit patterns into the same arithmetic.

use serde::{Deserialize, Serialize};

use crate::{Error, ModulusContext, Nat, Result, Rng};

/// Coefficient width used by the coverage campaigns.
pub const DEFAULT_K_BITS: u64 = 50;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedInput {
    #[serde(with = "crate::numeric::decimal")]
    pub encoded_base: Nat,
    #[serde(with = "crate::numeric::decimal")]
    pub encoded_exponent: Nat,
    #[serde(with = "crate::numeric::decimal")]
    pub base_coefficient: Nat,
    #[serde(with = "crate::numeric::decimal")]
    pub exponent_coefficient: Nat,
}

/// Draws a coefficient with exactly `k_bits` bits (top bit set).
pub fn draw_coefficient(rng: &mut Rng, k_bits: u64) -> Result<Nat> {
    if k_bits == 0 {
        return Err(Error::InvalidCoefficientWidth);
    }
    Ok(rng.full_width(k_bits))
}

pub fn encode_base_with(base: &Nat, ctx: &ModulusContext, k: &Nat) -> Nat {
    base + k * ctx.modulus()
}

pub fn encode_exponent_with(exponent: &Nat, ctx: &ModulusContext, k: &Nat) -> Nat {
    exponent + k * ctx.totient()
}

/// `(base + k·N, k)` with a fresh `k_bits`-bit coefficient.
pub fn encode_base(
    base: &Nat,
    ctx: &ModulusContext,
    rng: &mut Rng,
    k_bits: u64,
) -> Result<(Nat, Nat)> {
    let k = draw_coefficient(rng, k_bits)?;
    Ok((encode_base_with(base, ctx, &k), k))
}

/// `(exponent + k·φ(N), k)` with a fresh `k_bits`-bit coefficient.
pub fn encode_exponent(
    exponent: &Nat,
    ctx: &ModulusContext,
    rng: &mut Rng,
    k_bits: u64,
) -> Result<(Nat, Nat)> {
    let k = draw_coefficient(rng, k_bits)?;
    Ok((encode_exponent_with(exponent, ctx, &k), k))
}

/// Encodes both operands of one round, base coefficient drawn first.
pub fn encode_round(
    base: &Nat,
    exponent: &Nat,
    ctx: &ModulusContext,
    rng: &mut Rng,
    k_bits: u64,
) -> Result<EncodedInput> {
    let (encoded_base, base_coefficient) = encode_base(base, ctx, rng, k_bits)?;
    let (encoded_exponent, exponent_coefficient) = encode_exponent(exponent, ctx, rng, k_bits)?;
    Ok(EncodedInput {
        encoded_base,
        encoded_exponent,
        base_coefficient,
        exponent_coefficient,
    })
}
