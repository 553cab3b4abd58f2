//! Probabilistic primality and RSA-style modulus sampling.

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::{modexp_plain, Error, ModulusContext, Nat, Result, Rng};

const SMALL_PRIMES: [u32; 95] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307,
    311, 313, 317, 331, 337, 347, 349, 353, 359, 367, 373, 379, 383, 389, 397, 401, 409, 419, 421,
    431, 433, 439, 443, 449, 457, 461, 463, 467, 479, 487, 491, 499, 503,
];

/// Miller-Rabin rounds used for randomly generated candidates.
pub const GENERATION_ROUNDS: u32 = 8;
/// Rounds used when checking caller-supplied values.
pub const VERIFICATION_ROUNDS: u32 = 32;

/// Miller-Rabin with `rounds` random bases after trial division.
pub fn is_probable_prime(n: &Nat, rounds: u32, rng: &mut Rng) -> bool {
    if let Some(small) = n.to_u64() {
        if small < 2 {
            return false;
        }
        if small == 2 {
            return true;
        }
    }
    if n.is_even() {
        return false;
    }
    for &p in SMALL_PRIMES.iter() {
        if (n % p).is_zero() {
            return *n == Nat::from(p);
        }
    }
    let one = Nat::one();
    let n_minus_one = n - 1u8;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    let three = Nat::from(3u8);
    'witness: for _ in 0..rounds {
        // a uniform in [2, n − 2]
        let a = rng.nat_below(&(n - &three)) + 2u8;
        let mut x = modexp_plain(&a, &d, n).expect("n > 2");
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Random prime with exactly `bits` bits and its two top bits set, so the
/// product of two such primes has exactly the sum of their widths.
pub fn random_prime(bits: u64, rng: &mut Rng) -> Result<Nat> {
    if bits < 3 {
        return Err(Error::InvalidConfig(format!(
            "cannot sample a {bits}-bit prime"
        )));
    }
    loop {
        let mut candidate = rng.full_width(bits);
        candidate.set_bit(bits - 2, true);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate, GENERATION_ROUNDS, rng) {
            return Ok(candidate);
        }
    }
}

/// Distinct primes `p, q` with `N = p·q` of exactly `modulus_bits` bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsaModulus {
    pub p: Nat,
    pub q: Nat,
}

impl RsaModulus {
    pub fn generate(modulus_bits: u64, rng: &mut Rng) -> Result<Self> {
        if modulus_bits < 8 {
            return Err(Error::InvalidConfig(format!(
                "modulus of {modulus_bits} bits is too small"
            )));
        }
        let p = random_prime(modulus_bits / 2, rng)?;
        loop {
            let q = random_prime(modulus_bits - modulus_bits / 2, rng)?;
            if q != p {
                return Ok(RsaModulus { p, q });
            }
        }
    }

    pub fn modulus(&self) -> Nat {
        &self.p * &self.q
    }

    pub fn totient(&self) -> Nat {
        (&self.p - 1u8) * (&self.q - 1u8)
    }

    pub fn context(&self) -> ModulusContext {
        ModulusContext::new(self.modulus(), self.totient()).expect("p·q ≥ 6 and φ < N")
    }
}
