//! Diffie-Hellman and textbook RSA with every exponentiation protected by
//! Scheme 2.
//!
//! A prime modulus `P` gives the exponent order `P − 1` directly. An RSA key
//! pair that does not remember `φ(N)` still knows the multiple `e·d − 1`,
//! which serves both for reducing exponents and for encoding them.

use std::fmt;

use num_integer::Integer;
use num_traits::One;
use serde::Serialize;

use crate::encoding::DEFAULT_K_BITS;
use crate::primes::{is_probable_prime, VERIFICATION_ROUNDS};
use crate::protection::{scheme2_partial, FaultHooks, NoFault, Verdict, DEFAULT_WINDOW};
use crate::{Error, ModulusContext, Nat, Result, Rng};

/// Demo parameter sets shipped with the crate.
pub mod fixtures {
    pub const DH_23: &str = include_str!("../fixtures/dh-23.txt");
    pub const DH_SAFE_PRIMES: &str = include_str!("../fixtures/dh-safe-primes.txt");
    pub const RSA_3233: &str = include_str!("../fixtures/rsa-3233.txt");
    pub const RSA_2048: &str = include_str!("../fixtures/rsa-2048.txt");

    /// Looks up a built-in fixture by protocol and name (`23`, `3233`, `2048`).
    pub fn builtin(protocol: &str, name: &str) -> Option<&'static str> {
        match (protocol, name) {
            ("dh", "23") => Some(DH_23),
            ("rsa", "3233") => Some(RSA_3233),
            ("rsa", "2048") => Some(RSA_2048),
            _ => None,
        }
    }
}

/// `key = decimal` lines; blank lines and `#` comments are ignored. Keys may
/// repeat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    entries: Vec<(String, Nat)>,
}

impl Fixture {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Fixture(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let value: Nat = value.trim().parse().map_err(|_| {
                Error::Fixture(format!(
                    "line {}: `{}` is not a decimal integer",
                    lineno + 1,
                    value.trim()
                ))
            })?;
            entries.push((key.trim().to_string(), value));
        }
        Ok(Fixture { entries })
    }

    pub fn get(&self, key: &str) -> Result<&Nat> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
            .ok_or_else(|| Error::Fixture(format!("missing `{key}`")))
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Nat> + 'a {
        self.entries
            .iter()
            .filter(move |(k, _)| k == key)
            .map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DemoOptions {
    pub l: u64,
    pub k_bits: u64,
}

impl Default for DemoOptions {
    fn default() -> Self {
        DemoOptions {
            l: DEFAULT_WINDOW,
            k_bits: DEFAULT_K_BITS,
        }
    }
}

/// Routes faults into one step of a protocol (steps are numbered from 0).
pub struct FaultPlan<'a> {
    pub step: usize,
    pub hooks: &'a mut dyn FaultHooks,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepVerdict {
    pub step: &'static str,
    pub verdict: Verdict,
}

impl fmt::Display for StepVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.step, self.verdict)
    }
}

struct Protected<'a, 'h> {
    opts: DemoOptions,
    rng: &'a mut Rng,
    fault: Option<FaultPlan<'h>>,
    verdicts: Vec<StepVerdict>,
}

impl Protected<'_, '_> {
    fn exp(
        &mut self,
        label: &'static str,
        base: &Nat,
        exponent: &Nat,
        ctx: &ModulusContext,
    ) -> Result<Nat> {
        let step = self.verdicts.len();
        let mut inert = NoFault;
        let hooks: &mut dyn FaultHooks = match &mut self.fault {
            Some(plan) if plan.step == step => &mut *plan.hooks,
            _ => &mut inert,
        };
        let (verdict, _) = scheme2_partial(
            base,
            exponent,
            ctx,
            self.opts.l,
            self.rng,
            self.opts.k_bits,
            hooks,
        )?;
        let result = match &verdict {
            Verdict::Accepted(r) => r.clone(),
            Verdict::FaultDetected(detail) => {
                return Err(Error::FaultDetected {
                    step,
                    detail: *detail,
                })
            }
        };
        self.verdicts.push(StepVerdict {
            step: label,
            verdict,
        });
        Ok(result)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DhParams {
    prime: Nat,
    generator: Nat,
}

impl DhParams {
    pub fn new(prime: Nat, generator: Nat, rng: &mut Rng) -> Result<Self> {
        if !is_probable_prime(&prime, VERIFICATION_ROUNDS, rng) {
            return Err(Error::Precondition("P is not prime".into()));
        }
        if generator < Nat::from(2u8) || generator >= prime {
            return Err(Error::Precondition(
                "generator must satisfy 2 ≤ g < P".into(),
            ));
        }
        Ok(DhParams { prime, generator })
    }

    pub fn from_fixture(fixture: &Fixture, rng: &mut Rng) -> Result<Self> {
        DhParams::new(
            fixture.get("prime")?.clone(),
            fixture.get("generator")?.clone(),
            rng,
        )
    }

    pub fn prime(&self) -> &Nat {
        &self.prime
    }

    pub fn generator(&self) -> &Nat {
        &self.generator
    }

    pub fn context(&self) -> ModulusContext {
        ModulusContext::new(self.prime.clone(), &self.prime - 1u8).expect("P ≥ 3")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DhOutcome {
    #[serde(with = "crate::numeric::decimal")]
    pub public_a: Nat,
    #[serde(with = "crate::numeric::decimal")]
    pub public_b: Nat,
    #[serde(with = "crate::numeric::decimal")]
    pub shared_a: Nat,
    #[serde(with = "crate::numeric::decimal")]
    pub shared_b: Nat,
    pub verdicts: Vec<StepVerdict>,
}

/// Both sides of a key agreement: `g^a`, `g^b`, `(g^b)^a`, `(g^a)^b`.
pub fn dh_exchange(
    params: &DhParams,
    secret_a: &Nat,
    secret_b: &Nat,
    opts: DemoOptions,
    rng: &mut Rng,
    fault: Option<FaultPlan<'_>>,
) -> Result<DhOutcome> {
    let order = &params.prime - 1u8;
    for s in [secret_a, secret_b] {
        if s.bits() == 0 || *s >= order {
            return Err(Error::Precondition(
                "secrets must satisfy 1 ≤ s < P − 1".into(),
            ));
        }
    }
    let ctx = params.context();
    let mut run = Protected {
        opts,
        rng,
        fault,
        verdicts: Vec::new(),
    };
    let public_a = run.exp("alice public g^a", &params.generator, secret_a, &ctx)?;
    let public_b = run.exp("bob public g^b", &params.generator, secret_b, &ctx)?;
    let shared_a = run.exp("alice shared (g^b)^a", &public_b, secret_a, &ctx)?;
    let shared_b = run.exp("bob shared (g^a)^b", &public_a, secret_b, &ctx)?;
    Ok(DhOutcome {
        public_a,
        public_b,
        shared_a,
        shared_b,
        verdicts: run.verdicts,
    })
}

/// Which order the exponents are reduced and encoded with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentOrder {
    /// `φ(N)`, known from the primes.
    Totient,
    /// `e·d − 1`, available from the key pair alone.
    KeyMultiple,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsaKeyPair {
    modulus: Nat,
    public_exponent: Nat,
    private_exponent: Nat,
    totient: Option<Nat>,
}

impl RsaKeyPair {
    /// `totient` is optional; when given, `e·d ≡ 1 (mod φ(N))` is checked.
    pub fn new(
        modulus: Nat,
        public_exponent: Nat,
        private_exponent: Nat,
        totient: Option<Nat>,
    ) -> Result<Self> {
        if modulus < Nat::from(6u8) {
            return Err(Error::InvalidModulus);
        }
        let ed = &public_exponent * &private_exponent;
        if ed <= Nat::one() {
            return Err(Error::Precondition("e·d − 1 must be positive".into()));
        }
        if let Some(phi) = &totient {
            if !(&ed % phi).is_one() {
                return Err(Error::Precondition("e·d ≢ 1 (mod φ(N))".into()));
            }
        }
        Ok(RsaKeyPair {
            modulus,
            public_exponent,
            private_exponent,
            totient,
        })
    }

    /// Reads `n`, `e`, `d` and, when both primes are present, derives `φ(N)`.
    pub fn from_fixture(fixture: &Fixture) -> Result<Self> {
        let n = fixture.get("n")?.clone();
        let totient = match (fixture.get("p"), fixture.get("q")) {
            (Ok(p), Ok(q)) => {
                if p * q != n {
                    return Err(Error::Fixture("n ≠ p·q".into()));
                }
                Some((p - 1u8) * (q - 1u8))
            }
            _ => None,
        };
        RsaKeyPair::new(
            n,
            fixture.get("e")?.clone(),
            fixture.get("d")?.clone(),
            totient,
        )
    }

    pub fn modulus(&self) -> &Nat {
        &self.modulus
    }

    pub fn public_exponent(&self) -> &Nat {
        &self.public_exponent
    }

    pub fn private_exponent(&self) -> &Nat {
        &self.private_exponent
    }

    pub fn totient(&self) -> Option<&Nat> {
        self.totient.as_ref()
    }

    /// `e·d − 1`, a positive multiple of `φ(N)`.
    pub fn totient_multiple(&self) -> Nat {
        &self.public_exponent * &self.private_exponent - 1u8
    }

    pub fn context(&self, order: ExponentOrder) -> Result<ModulusContext> {
        match order {
            ExponentOrder::Totient => {
                let phi = self
                    .totient
                    .clone()
                    .ok_or_else(|| Error::Precondition("φ(N) unknown for this key pair".into()))?;
                ModulusContext::new(self.modulus.clone(), phi)
            }
            ExponentOrder::KeyMultiple => {
                ModulusContext::with_totient_multiple(self.modulus.clone(), self.totient_multiple())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RsaOutcome {
    #[serde(with = "crate::numeric::decimal")]
    pub ciphertext: Nat,
    #[serde(with = "crate::numeric::decimal")]
    pub recovered: Nat,
    pub verdicts: Vec<StepVerdict>,
}

/// Encrypts `m^e` and decrypts `c^d`, both protected.
pub fn rsa_roundtrip(
    keys: &RsaKeyPair,
    message: &Nat,
    order: ExponentOrder,
    opts: DemoOptions,
    rng: &mut Rng,
    fault: Option<FaultPlan<'_>>,
) -> Result<RsaOutcome> {
    if message.bits() == 0 || message >= &keys.modulus {
        return Err(Error::Precondition("message must satisfy 1 ≤ m < N".into()));
    }
    if !message.gcd(&keys.modulus).is_one() {
        return Err(Error::Precondition("message shares a factor with N".into()));
    }
    let ctx = keys.context(order)?;
    let mut run = Protected {
        opts,
        rng,
        fault,
        verdicts: Vec::new(),
    };
    let ciphertext = run.exp("encrypt m^e", message, &keys.public_exponent, &ctx)?;
    let recovered = run.exp("decrypt c^d", &ciphertext, &keys.private_exponent, &ctx)?;
    Ok(RsaOutcome {
        ciphertext,
        recovered,
        verdicts: run.verdicts,
    })
}
