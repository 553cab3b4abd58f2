//! Right-to-left modular exponentiation, plain and instrumented.

mod montgomery;

use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};
use montgomery::Montgomery;

/// Arbitrary-precision non-negative integer used for every operand.
pub type Nat = num_bigint::BigUint;

/// Serde adapter writing a [`Nat`] as a decimal string.
pub mod decimal {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use super::Nat;

    pub fn serialize<S: Serializer>(n: &Nat, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(n)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Nat, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(D::Error::custom)
    }
}

/// Multiply/square/reduce strategy for one modulus.
#[derive(Debug, Clone)]
enum Arith {
    Montgomery(Montgomery),
    Plain,
}

impl Arith {
    fn for_modulus(modulus: &Nat) -> Self {
        Montgomery::new(modulus).map_or(Arith::Plain, Arith::Montgomery)
    }
}

/// A modulus `N` together with the order used to reduce exponents.
///
/// Normally the order is Euler's totient `φ(N)`. [`with_totient_multiple`]
/// accepts any positive multiple of `φ(N)` instead (an RSA key pair only
/// knows `e·d − 1`); exponent reduction stays value-preserving for units.
///
/// The library never factors `N`; the caller supplies the order.
///
/// [`with_totient_multiple`]: ModulusContext::with_totient_multiple
#[derive(Debug, Clone)]
pub struct ModulusContext {
    modulus: Nat,
    totient: Nat,
    arith: Arith,
}

impl ModulusContext {
    /// `totient` must be `φ(N)`, so `1 ≤ totient < N`.
    pub fn new(modulus: Nat, totient: Nat) -> Result<Self> {
        if modulus < Nat::from(2u8) {
            return Err(Error::InvalidModulus);
        }
        if totient.is_zero() || totient >= modulus {
            return Err(Error::InvalidTotient("φ(N) must satisfy 1 ≤ φ(N) < N"));
        }
        Ok(Self::build(modulus, totient))
    }

    pub fn with_totient_multiple(modulus: Nat, multiple: Nat) -> Result<Self> {
        if modulus < Nat::from(2u8) {
            return Err(Error::InvalidModulus);
        }
        if multiple.is_zero() {
            return Err(Error::InvalidTotient("multiple of φ(N) must be positive"));
        }
        Ok(Self::build(modulus, multiple))
    }

    fn build(modulus: Nat, totient: Nat) -> Self {
        let arith = Arith::for_modulus(&modulus);
        ModulusContext {
            modulus,
            totient,
            arith,
        }
    }

    pub fn modulus(&self) -> &Nat {
        &self.modulus
    }

    /// `φ(N)` or the multiple of it the context was built with.
    pub fn totient(&self) -> &Nat {
        &self.totient
    }

    pub fn is_unit(&self, x: &Nat) -> bool {
        (x % &self.modulus).gcd(&self.modulus).is_one()
    }

    pub(crate) fn check_unit(&self, x: &Nat) -> Result<()> {
        if self.is_unit(x) {
            Ok(())
        } else {
            Err(Error::NotAUnit)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpOutput {
    #[serde(with = "decimal")]
    pub result: Nat,
    /// Accumulator after `l` loop iterations, i.e. `x^(y mod 2^l)`; equal to
    /// `result` when the reduced exponent has at most `l` bits.
    #[serde(with = "decimal")]
    pub result_partial: Nat,
    pub hamming_weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialOutput {
    #[serde(with = "decimal")]
    pub partial: Nat,
    pub hamming_weight: u64,
}

pub fn popcount(n: &Nat) -> u64 {
    n.count_ones()
}

/// Runs the right-to-left loop for `iterations` steps over `exponent`'s bits,
/// capturing the accumulator after step `capture` (if it is reached).
fn right_to_left(
    arith: &Arith,
    modulus: &Nat,
    base: &Nat,
    exponent: &Nat,
    iterations: u64,
    capture: Option<u64>,
) -> (Nat, Option<Nat>) {
    match arith {
        Arith::Montgomery(m) => {
            let mut result = m.one();
            let mut x = m.enter(base);
            let mut scratch = m.scratch();
            let mut partial = None;
            for counter in 1..=iterations {
                if exponent.bit(counter - 1) {
                    m.mul_assign(&mut result, &x, &mut scratch);
                }
                m.square_assign(&mut x, &mut scratch);
                if capture == Some(counter) {
                    partial = Some(m.leave(&result));
                }
            }
            (m.leave(&result), partial)
        }
        Arith::Plain => {
            let mut result = Nat::one() % modulus;
            let mut x = base.clone();
            let mut partial = None;
            for counter in 1..=iterations {
                if exponent.bit(counter - 1) {
                    result = (&result * &x) % modulus;
                }
                x = (&x * &x) % modulus;
                if capture == Some(counter) {
                    partial = Some(result.clone());
                }
            }
            (result, partial)
        }
    }
}

/// `base^exponent mod modulus`, square-and-multiply from the least
/// significant exponent bit.
pub fn modexp_plain(base: &Nat, exponent: &Nat, modulus: &Nat) -> Result<Nat> {
    if *modulus < Nat::from(2u8) {
        return Err(Error::InvalidModulus);
    }
    let arith = Arith::for_modulus(modulus);
    let base = base % modulus;
    Ok(right_to_left(&arith, modulus, &base, exponent, exponent.bits(), None).0)
}

/// Full exponentiation that also reports the accumulator after `l`
/// iterations and the Hamming weight of the reduced exponent.
///
/// The exponent is reduced modulo the context's totient first, which only
/// preserves the value for bases coprime to `N`; other bases are rejected.
pub fn modexp_instrumented(
    base: &Nat,
    exponent: &Nat,
    ctx: &ModulusContext,
    l: u64,
) -> Result<ExpOutput> {
    if l == 0 {
        return Err(Error::InvalidWindow);
    }
    ctx.check_unit(base)?;
    Ok(instrumented_unchecked(base, exponent, ctx, l))
}

/// Only the low `l` exponent bits are processed, plus the Hamming weight of
/// the whole reduced exponent. Never runs the full exponentiation.
pub fn modexp_partial(
    base: &Nat,
    exponent: &Nat,
    ctx: &ModulusContext,
    l: u64,
) -> Result<PartialOutput> {
    if l == 0 {
        return Err(Error::InvalidWindow);
    }
    ctx.check_unit(base)?;
    Ok(partial_unchecked(base, exponent, ctx, l))
}

/// No unit check: faulted operands reach this path and must still compute.
pub(crate) fn instrumented_unchecked(
    base: &Nat,
    exponent: &Nat,
    ctx: &ModulusContext,
    l: u64,
) -> ExpOutput {
    let x = base % &ctx.modulus;
    let y = exponent % &ctx.totient;
    let hamming_weight = popcount(&y);
    let (result, partial) = right_to_left(&ctx.arith, &ctx.modulus, &x, &y, y.bits(), Some(l));
    let result_partial = partial.unwrap_or_else(|| result.clone());
    ExpOutput {
        result,
        result_partial,
        hamming_weight,
    }
}

pub(crate) fn partial_unchecked(
    base: &Nat,
    exponent: &Nat,
    ctx: &ModulusContext,
    l: u64,
) -> PartialOutput {
    let x = base % &ctx.modulus;
    let y = exponent % &ctx.totient;
    let hamming_weight = popcount(&y);
    let iterations = y.bits().min(l);
    let (partial, _) = right_to_left(&ctx.arith, &ctx.modulus, &x, &y, iterations, None);
    PartialOutput {
        partial,
        hamming_weight,
    }
}
