//! Recomputation-based fault detection around the exponentiation.
//!
//! Both schemes run two rounds at distinct times on independently encoded
//! inputs and compare round-local values only. Scheme 1 repeats the whole
//! exponentiation; Scheme 2 repeats just the first `l` loop iterations and
//! compares the partial accumulators plus the reduced exponent's Hamming
//! weight. Round 1 of Scheme 2 gets its partial accumulator from the same
//! loop that produces the output.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::encoding::{encode_round, EncodedInput};
use crate::numeric::{instrumented_unchecked, partial_unchecked, PartialOutput};
use crate::{Error, ExpOutput, ModulusContext, Nat, Result, Rng};

/// Default partial window for 2048-bit exponents (1/16 of the width).
pub const DEFAULT_WINDOW: u64 = 128;

/// Window as a fraction of exponent width used by the hardware preset.
pub const HARDWARE_WINDOW_FRACTION: f64 = 0.12;

/// Window preset matching 12% of the exponent width, rounded up.
pub fn hardware_window(exponent_bits: u64) -> u64 {
    ((exponent_bits as f64 * HARDWARE_WINDOW_FRACTION).ceil() as u64).max(1)
}

/// Encoded operands a fault hook may disturb.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operand {
    X1,
    Y1,
    X2,
    Y2,
}

impl Operand {
    pub const ALL: [Operand; 4] = [Operand::X1, Operand::Y1, Operand::X2, Operand::Y2];

    pub fn as_str(self) -> &'static str {
        match self {
            Operand::X1 => "x1",
            Operand::Y1 => "y1",
            Operand::X2 => "x2",
            Operand::Y2 => "y2",
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

/// Injection seam between encoding and exponentiation.
///
/// Called once per operand, in the order x1, y1 (before round 1) and
/// x2, y2 (before round 2). Return the value unchanged to leave it alone.
pub trait FaultHooks {
    fn inject(&mut self, operand: Operand, value: Nat) -> Nat;
}

/// Hooks that never touch anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoFault;

impl FaultHooks for NoFault {
    fn inject(&mut self, _operand: Operand, value: Nat) -> Nat {
        value
    }
}

impl<F> FaultHooks for F
where
    F: FnMut(Operand, Nat) -> Nat,
{
    fn inject(&mut self, operand: Operand, value: Nat) -> Nat {
        self(operand, value)
    }
}

/// Which comparison rejected the computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mismatch {
    PartialMismatch,
    HammingMismatch,
    FullMismatch,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mismatch::PartialMismatch => "partial-mismatch",
            Mismatch::HammingMismatch => "hamming-mismatch",
            Mismatch::FullMismatch => "full-mismatch",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accepted(#[serde(with = "crate::numeric::decimal")] Nat),
    FaultDetected(Mismatch),
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted(_))
    }

    pub fn result(&self) -> Option<&Nat> {
        match self {
            Verdict::Accepted(r) => Some(r),
            Verdict::FaultDetected(_) => None,
        }
    }

    pub fn detail(&self) -> Option<Mismatch> {
        match self {
            Verdict::Accepted(_) => None,
            Verdict::FaultDetected(m) => Some(*m),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Accepted(_) => f.write_str("ACCEPTED"),
            Verdict::FaultDetected(m) => write!(f, "FAULT_DETECTED({m})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoundTwo {
    Full(ExpOutput),
    Partial(PartialOutput),
}

/// Everything both rounds saw. `x1..y2` are the values after the hooks ran,
/// `encodings` the values the encoder produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTranscript {
    #[serde(with = "crate::numeric::decimal")]
    pub x1: Nat,
    #[serde(with = "crate::numeric::decimal")]
    pub y1: Nat,
    #[serde(with = "crate::numeric::decimal")]
    pub x2: Nat,
    #[serde(with = "crate::numeric::decimal")]
    pub y2: Nat,
    pub encodings: [EncodedInput; 2],
    pub round1: ExpOutput,
    pub round2: RoundTwo,
}

struct HookedRound {
    encoding: EncodedInput,
    base: Nat,
    exponent: Nat,
}

fn encode_and_inject(
    base: &Nat,
    exponent: &Nat,
    ctx: &ModulusContext,
    rng: &mut Rng,
    k_bits: u64,
    hooks: &mut dyn FaultHooks,
    operands: (Operand, Operand),
) -> Result<HookedRound> {
    let encoding = encode_round(base, exponent, ctx, rng, k_bits)?;
    let base = hooks.inject(operands.0, encoding.encoded_base.clone());
    let exponent = hooks.inject(operands.1, encoding.encoded_exponent.clone());
    Ok(HookedRound {
        encoding,
        base,
        exponent,
    })
}

/// Scheme 1: two full exponentiations, accepted only if `Q1 = Q2`.
pub fn scheme1_full(
    base: &Nat,
    exponent: &Nat,
    ctx: &ModulusContext,
    rng: &mut Rng,
    k_bits: u64,
    hooks: &mut dyn FaultHooks,
) -> Result<(Verdict, RoundTranscript)> {
    ctx.check_unit(base)?;
    let first = encode_and_inject(
        base,
        exponent,
        ctx,
        rng,
        k_bits,
        hooks,
        (Operand::X1, Operand::Y1),
    )?;
    let round1 = instrumented_unchecked(&first.base, &first.exponent, ctx, u64::MAX);
    let second = encode_and_inject(
        base,
        exponent,
        ctx,
        rng,
        k_bits,
        hooks,
        (Operand::X2, Operand::Y2),
    )?;
    let round2 = instrumented_unchecked(&second.base, &second.exponent, ctx, u64::MAX);

    let verdict = if round1.result == round2.result {
        Verdict::Accepted(round1.result.clone())
    } else {
        Verdict::FaultDetected(Mismatch::FullMismatch)
    };
    let transcript = RoundTranscript {
        x1: first.base,
        y1: first.exponent,
        x2: second.base,
        y2: second.exponent,
        encodings: [first.encoding, second.encoding],
        round1,
        round2: RoundTwo::Full(round2),
    };
    Ok((verdict, transcript))
}

/// Scheme 2: full round 1, partial round 2 over the low `l` exponent bits.
///
/// Accepted iff the partial accumulators agree and the Hamming weights of
/// the reduced exponents agree. The partial comparison is made first.
pub fn scheme2_partial(
    base: &Nat,
    exponent: &Nat,
    ctx: &ModulusContext,
    l: u64,
    rng: &mut Rng,
    k_bits: u64,
    hooks: &mut dyn FaultHooks,
) -> Result<(Verdict, RoundTranscript)> {
    if l == 0 {
        return Err(Error::InvalidWindow);
    }
    ctx.check_unit(base)?;
    let first = encode_and_inject(
        base,
        exponent,
        ctx,
        rng,
        k_bits,
        hooks,
        (Operand::X1, Operand::Y1),
    )?;
    let round1 = instrumented_unchecked(&first.base, &first.exponent, ctx, l);
    let second = encode_and_inject(
        base,
        exponent,
        ctx,
        rng,
        k_bits,
        hooks,
        (Operand::X2, Operand::Y2),
    )?;
    let round2 = partial_unchecked(&second.base, &second.exponent, ctx, l);

    let verdict = if round1.result_partial != round2.partial {
        Verdict::FaultDetected(Mismatch::PartialMismatch)
    } else if round1.hamming_weight != round2.hamming_weight {
        Verdict::FaultDetected(Mismatch::HammingMismatch)
    } else {
        Verdict::Accepted(round1.result.clone())
    };
    let transcript = RoundTranscript {
        x1: first.base,
        y1: first.exponent,
        x2: second.base,
        y2: second.exponent,
        encodings: [first.encoding, second.encoding],
        round1,
        round2: RoundTwo::Partial(round2),
    };
    Ok((verdict, transcript))
}
