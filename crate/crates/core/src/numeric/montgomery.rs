//! Word-level Montgomery multiplication for odd moduli.

use num_bigint::BigUint;

use crate::Nat;

#[derive(Debug, Clone)]
pub(crate) struct Montgomery {
    modulus: Vec<u64>,
    /// −N⁻¹ mod 2⁶⁴
    n0_inv: u64,
    /// R² mod N, R = 2^(64·limbs)
    r2: Vec<u64>,
    /// R mod N, the Montgomery form of 1
    one: Vec<u64>,
}

pub(crate) fn to_limbs(x: &Nat, len: usize) -> Vec<u64> {
    let mut limbs = x.to_u64_digits();
    debug_assert!(limbs.len() <= len);
    limbs.resize(len, 0);
    limbs
}

pub(crate) fn from_limbs(limbs: &[u64]) -> Nat {
    let digits = limbs
        .iter()
        .flat_map(|&w| [w as u32, (w >> 32) as u32])
        .collect();
    BigUint::new(digits)
}

impl Montgomery {
    /// `None` for even moduli.
    pub(crate) fn new(modulus: &Nat) -> Option<Self> {
        if !modulus.bit(0) {
            return None;
        }
        let n = modulus.to_u64_digits();
        let len = n.len();
        // Newton iteration doubles the number of correct low bits each step.
        let mut inv: u64 = 1;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(n[0].wrapping_mul(inv)));
        }
        let r = Nat::from(1u8) << (64 * len);
        let one = to_limbs(&(&r % modulus), len);
        let r2 = to_limbs(&((&r * &r) % modulus), len);
        Some(Montgomery {
            modulus: n,
            n0_inv: inv.wrapping_neg(),
            r2,
            one,
        })
    }

    pub(crate) fn one(&self) -> Vec<u64> {
        self.one.clone()
    }

    /// `x` must already be reduced below N.
    pub(crate) fn enter(&self, x: &Nat) -> Vec<u64> {
        let limbs = to_limbs(x, self.modulus.len());
        self.mul(&limbs, &self.r2)
    }

    pub(crate) fn leave(&self, x: &[u64]) -> Nat {
        let mut unit = vec![0u64; self.modulus.len()];
        unit[0] = 1;
        from_limbs(&self.mul(x, &unit))
    }

    /// Scratch buffer sized for [`mul_assign`](Self::mul_assign) and
    /// [`square_assign`](Self::square_assign).
    pub(crate) fn scratch(&self) -> Vec<u64> {
        vec![0u64; 2 * self.modulus.len() + 1]
    }

    /// `a·b·R⁻¹ mod N` for `a, b < N`.
    pub(crate) fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut out = a.to_vec();
        let mut t = self.scratch();
        self.mul_assign(&mut out, b, &mut t);
        out
    }

    /// `acc ← acc·b·R⁻¹ mod N`.
    pub(crate) fn mul_assign(&self, acc: &mut [u64], b: &[u64], t: &mut [u64]) {
        let n = self.modulus.len();
        t.fill(0);
        for (i, &bi) in b.iter().enumerate() {
            let bi = bi as u128;
            let mut carry = 0u64;
            for (tj, &aj) in t[i..i + n].iter_mut().zip(acc.iter()) {
                let s = *tj as u128 + aj as u128 * bi + carry as u128;
                *tj = s as u64;
                carry = (s >> 64) as u64;
            }
            t[i + n] = carry;
        }
        self.reduce(t, acc);
    }

    /// `x ← x²·R⁻¹ mod N`.
    pub(crate) fn square_assign(&self, x: &mut [u64], t: &mut [u64]) {
        let n = self.modulus.len();
        t.fill(0);
        // Off-diagonal products once, then doubled, then the diagonal added.
        for i in 0..n {
            let xi = x[i] as u128;
            let mut carry = 0u64;
            for (tj, &xj) in t[2 * i + 1..i + n].iter_mut().zip(x[i + 1..].iter()) {
                let s = *tj as u128 + xj as u128 * xi + carry as u128;
                *tj = s as u64;
                carry = (s >> 64) as u64;
            }
            t[i + n] = carry;
        }
        let mut top = 0u64;
        for w in t[..2 * n].iter_mut() {
            let next = *w >> 63;
            *w = (*w << 1) | top;
            top = next;
        }
        let mut carry = 0u64;
        for (i, &xi) in x.iter().enumerate() {
            let sq = xi as u128 * xi as u128;
            let s = t[2 * i] as u128 + (sq as u64) as u128 + carry as u128;
            t[2 * i] = s as u64;
            let s = t[2 * i + 1] as u128 + (sq >> 64) + (s >> 64);
            t[2 * i + 1] = s as u64;
            carry = (s >> 64) as u64;
        }
        self.reduce(t, x);
    }

    /// Montgomery reduction of the `2n`-limb value in `t[..2n]` (with
    /// `t[2n] = 0`) into `out`.
    fn reduce(&self, t: &mut [u64], out: &mut [u64]) {
        let n = self.modulus.len();
        t[2 * n] = 0;
        for i in 0..n {
            let m = t[i].wrapping_mul(self.n0_inv) as u128;
            let mut carry = 0u64;
            for (tj, &nj) in t[i..i + n].iter_mut().zip(self.modulus.iter()) {
                let s = *tj as u128 + nj as u128 * m + carry as u128;
                *tj = s as u64;
                carry = (s >> 64) as u64;
            }
            let mut k = i + n;
            while carry != 0 {
                let (s, c) = t[k].overflowing_add(carry);
                t[k] = s;
                carry = c as u64;
                k += 1;
            }
        }
        // t[n..=2n] < 2N here.
        let hi = &mut t[n..];
        if hi[n] != 0 || !less_than(&hi[..n], &self.modulus) {
            let mut borrow = 0u64;
            for (h, &nj) in hi[..n].iter_mut().zip(self.modulus.iter()) {
                let (d, b1) = h.overflowing_sub(nj);
                let (d, b2) = d.overflowing_sub(borrow);
                *h = d;
                borrow = (b1 | b2) as u64;
            }
        }
        out.copy_from_slice(&hi[..n]);
    }
}

fn less_than(a: &[u64], b: &[u64]) -> bool {
    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
        if x != y {
            return x < y;
        }
    }
    false
}
