//! Fault models and the hooks that inject them into protected runs.
//!
//! Four disturbance laws are supported: replacement by a fresh random value,
//! a single bit flip, `k` scattered flips at distinct positions, and a burst
//! of `k` adjacent flips (truncated at the top of the operand, never
//! wrapped). Positions range over the operand's own bit length unless a
//! fixed width is configured.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::protection::{FaultHooks, Operand};
use crate::{Error, Nat, Result, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    /// No disturbance; used for completeness runs.
    Inert,
    TotalRandom,
    SingleBitFlip,
    KRandomFlip,
    KBurstFlip,
}

impl FaultKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FaultKind::Inert => "none",
            FaultKind::TotalRandom => "total-random",
            FaultKind::SingleBitFlip => "single-bit",
            FaultKind::KRandomFlip => "k-random",
            FaultKind::KBurstFlip => "k-burst",
        }
    }

    fn code(self) -> u64 {
        match self {
            FaultKind::Inert => 0,
            FaultKind::TotalRandom => 1,
            FaultKind::SingleBitFlip => 2,
            FaultKind::KRandomFlip => 3,
            FaultKind::KBurstFlip => 4,
        }
    }

    pub fn takes_k(self) -> bool {
        matches!(self, FaultKind::KRandomFlip | FaultKind::KBurstFlip)
    }
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for FaultKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => FaultKind::Inert,
            "total-random" => FaultKind::TotalRandom,
            "single-bit" => FaultKind::SingleBitFlip,
            "k-random" => FaultKind::KRandomFlip,
            "k-burst" => FaultKind::KBurstFlip,
            other => {
                return Err(Error::InvalidFaultModel(format!(
                    "unknown model `{other}` (expected none, total-random, single-bit, k-random or k-burst)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FaultModel {
    kind: FaultKind,
    k: u64,
    /// Fixed position domain; `None` means the operand's bit length.
    width_bits: Option<u64>,
}

impl FaultModel {
    pub fn inert() -> Self {
        Self::unchecked(FaultKind::Inert, 0)
    }

    pub fn total_random() -> Self {
        Self::unchecked(FaultKind::TotalRandom, 0)
    }

    pub fn single_bit() -> Self {
        Self::unchecked(FaultKind::SingleBitFlip, 1)
    }

    pub fn k_random(k: u64) -> Result<Self> {
        Self::new(FaultKind::KRandomFlip, Some(k))
    }

    pub fn k_burst(k: u64) -> Result<Self> {
        Self::new(FaultKind::KBurstFlip, Some(k))
    }

    /// `k` is required for the two k-parameterized kinds and ignored otherwise.
    pub fn new(kind: FaultKind, k: Option<u64>) -> Result<Self> {
        match (kind.takes_k(), k) {
            (true, None) => Err(Error::InvalidFaultModel(format!(
                "{kind} needs a fault count k"
            ))),
            (true, Some(0)) => Err(Error::InvalidFaultModel("k must be at least 1".into())),
            (true, Some(k)) => Ok(Self::unchecked(kind, k)),
            (false, _) => Ok(match kind {
                FaultKind::SingleBitFlip => Self::single_bit(),
                _ => Self::unchecked(kind, 0),
            }),
        }
    }

    fn unchecked(kind: FaultKind, k: u64) -> Self {
        FaultModel {
            kind,
            k,
            width_bits: None,
        }
    }

    /// Pins the position/replacement domain to `[0, 2^width_bits)`.
    pub fn with_width(mut self, width_bits: u64) -> Result<Self> {
        if width_bits == 0 {
            return Err(Error::InvalidFaultModel(
                "width must be at least 1 bit".into(),
            ));
        }
        if self.kind.takes_k() && self.k > width_bits {
            return Err(Error::InvalidFaultModel(format!(
                "k = {} exceeds width {width_bits}",
                self.k
            )));
        }
        self.width_bits = Some(width_bits);
        Ok(self)
    }

    pub fn kind(&self) -> FaultKind {
        self.kind
    }

    /// Number of bits the model flips, where that is a model parameter.
    pub fn k(&self) -> Option<u64> {
        match self.kind {
            FaultKind::SingleBitFlip | FaultKind::KRandomFlip | FaultKind::KBurstFlip => {
                Some(self.k)
            }
            FaultKind::Inert | FaultKind::TotalRandom => None,
        }
    }

    pub fn width_bits(&self) -> Option<u64> {
        self.width_bits
    }

    pub fn label(&self) -> &'static str {
        self.kind.as_str()
    }

    pub(crate) fn stream_key(&self) -> [u64; 2] {
        [self.kind.code(), self.k]
    }

    fn width_for(&self, value: &Nat) -> u64 {
        self.width_bits.unwrap_or_else(|| value.bits().max(1))
    }
}

impl fmt::Display for FaultModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FaultKind::KRandomFlip | FaultKind::KBurstFlip => {
                write!(f, "{}(k={})", self.kind, self.k)
            }
            _ => f.write_str(self.kind.as_str()),
        }
    }
}

/// Operand selector: one encoded operand or a composite of several.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultTarget {
    X1,
    Y1,
    X2,
    Y2,
    /// (x1, y1)
    C1,
    /// (x2, y2)
    C2,
    /// (x1, x2, y1, y2)
    C3,
}

impl FaultTarget {
    pub const ALL: [FaultTarget; 7] = [
        FaultTarget::X1,
        FaultTarget::Y1,
        FaultTarget::X2,
        FaultTarget::Y2,
        FaultTarget::C1,
        FaultTarget::C2,
        FaultTarget::C3,
    ];

    pub fn operands(self) -> &'static [Operand] {
        match self {
            FaultTarget::X1 => &[Operand::X1],
            FaultTarget::Y1 => &[Operand::Y1],
            FaultTarget::X2 => &[Operand::X2],
            FaultTarget::Y2 => &[Operand::Y2],
            FaultTarget::C1 => &[Operand::X1, Operand::Y1],
            FaultTarget::C2 => &[Operand::X2, Operand::Y2],
            FaultTarget::C3 => &Operand::ALL,
        }
    }

    pub fn covers(self, operand: Operand) -> bool {
        self.operands().contains(&operand)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FaultTarget::X1 => "x1",
            FaultTarget::Y1 => "y1",
            FaultTarget::X2 => "x2",
            FaultTarget::Y2 => "y2",
            FaultTarget::C1 => "c1",
            FaultTarget::C2 => "c2",
            FaultTarget::C3 => "c3",
        }
    }

    pub(crate) fn code(self) -> u64 {
        FaultTarget::ALL.iter().position(|&t| t == self).unwrap() as u64
    }
}

impl fmt::Display for FaultTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for FaultTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FaultTarget::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown target `{s}` (expected x1|y1|x2|y2|c1|c2|c3)"
                ))
            })
    }
}

/// What one injection did to one operand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "change", rename_all = "kebab-case")]
pub enum Change {
    Unchanged,
    Replaced {
        #[serde(with = "crate::numeric::decimal")]
        value: Nat,
    },
    Flipped {
        positions: Vec<u64>,
    },
    Burst {
        start: u64,
        len: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionRecord {
    pub operand: Option<Operand>,
    pub width_bits: u64,
    #[serde(flatten)]
    pub change: Change,
}

/// `value` with every listed bit position toggled.
pub fn flip_positions(value: &Nat, positions: &[u64]) -> Nat {
    let mut out = value.clone();
    for &p in positions {
        let bit = out.bit(p);
        out.set_bit(p, !bit);
    }
    out
}

/// Run of `min(k, width − start)` ones beginning at bit `start`.
pub fn burst_mask(start: u64, k: u64, width: u64) -> Nat {
    let len = k.min(width.saturating_sub(start));
    ((Nat::from(1u8) << len) - 1u8) << start
}

/// Applies `model` to `value`, returning the disturbed value and a record.
pub fn apply_fault_recorded(
    model: &FaultModel,
    value: &Nat,
    rng: &mut Rng,
) -> (Nat, InjectionRecord) {
    let width = model.width_for(value);
    let (out, change) = match model.kind {
        FaultKind::Inert => (value.clone(), Change::Unchanged),
        FaultKind::TotalRandom => {
            let v = rng.bits(width);
            (v.clone(), Change::Replaced { value: v })
        }
        FaultKind::SingleBitFlip => {
            let positions = vec![rng.below(width)];
            (
                flip_positions(value, &positions),
                Change::Flipped { positions },
            )
        }
        FaultKind::KRandomFlip => {
            let positions = rng.distinct_positions(model.k.min(width), width);
            (
                flip_positions(value, &positions),
                Change::Flipped { positions },
            )
        }
        FaultKind::KBurstFlip => {
            let start = rng.below(width);
            let mask = burst_mask(start, model.k, width);
            let len = mask.count_ones();
            (value ^ mask, Change::Burst { start, len })
        }
    };
    let record = InjectionRecord {
        operand: None,
        width_bits: width,
        change,
    };
    (out, record)
}

pub fn apply_fault(model: &FaultModel, value: &Nat, rng: &mut Rng) -> Nat {
    apply_fault_recorded(model, value, rng).0
}

/// Hooks applying one fault model to the operands named by a target.
#[derive(Debug, Clone)]
pub struct InjectionHooks {
    model: FaultModel,
    target: FaultTarget,
    rng: Rng,
    records: Vec<InjectionRecord>,
}

impl InjectionHooks {
    pub fn model(&self) -> &FaultModel {
        &self.model
    }

    pub fn target(&self) -> FaultTarget {
        self.target
    }

    pub fn records(&self) -> &[InjectionRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<InjectionRecord> {
        self.records
    }
}

impl FaultHooks for InjectionHooks {
    fn inject(&mut self, operand: Operand, value: Nat) -> Nat {
        if self.model.kind == FaultKind::Inert || !self.target.covers(operand) {
            return value;
        }
        let (out, mut record) = apply_fault_recorded(&self.model, &value, &mut self.rng);
        record.operand = Some(operand);
        self.records.push(record);
        out
    }
}

pub fn make_hooks(model: FaultModel, target: FaultTarget, rng: Rng) -> InjectionHooks {
    InjectionHooks {
        model,
        target,
        rng,
        records: Vec::new(),
    }
}
