//! Prime-field arithmetic and seeded uniform sampling.
//!
//! The modulus is a runtime value so that the same code runs over tiny fields
//! (exhaustive secrecy enumeration) and over fields large enough for real
//! point selection. Every element carries its modulus; mixing elements from
//! different fields is reported as [`FieldError::FieldMismatch`] by the
//! `checked_*` methods and panics in the operator impls.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("field mismatch: F_{left} vs F_{right}")]
    FieldMismatch { left: u64, right: u64 },
    #[error("division by zero")]
    DivisionByZero,
}

/// The prime field `F_q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct PrimeField {
    modulus: u64,
}

impl PrimeField {
    pub fn new(modulus: u64) -> Result<Self, FieldError> {
        if !is_prime(modulus) {
            return Err(FieldError::NotPrime(modulus));
        }
        Ok(Self { modulus })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Element with the canonical representative of `value mod q`.
    #[inline]
    pub fn elem(&self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.modulus,
            modulus: self.modulus,
        }
    }

    /// Element for a signed integer, reduced into `[0, q)`.
    pub fn elem_i64(&self, value: i64) -> FieldElement {
        let q = self.modulus as i128;
        let v = (value as i128).rem_euclid(q);
        self.elem(v as u64)
    }

    #[inline]
    pub fn zero(&self) -> FieldElement {
        self.elem(0)
    }

    #[inline]
    pub fn one(&self) -> FieldElement {
        self.elem(1)
    }

    /// Number of bits needed to hold any element.
    pub fn bits(&self) -> u32 {
        64 - (self.modulus - 1).leading_zeros()
    }

    // Raw-representative helpers used by the matrix and polynomial kernels.
    // Inputs must already be reduced.

    #[inline]
    pub(crate) fn add_raw(&self, a: u64, b: u64) -> u64 {
        let (s, carry) = a.overflowing_add(b);
        if carry || s >= self.modulus {
            s.wrapping_sub(self.modulus)
        } else {
            s
        }
    }

    #[inline]
    pub(crate) fn sub_raw(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            self.modulus - (b - a)
        }
    }

    #[inline]
    pub(crate) fn mul_raw(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.modulus as u128) as u64
    }

    #[inline]
    pub(crate) fn neg_raw(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.modulus - a
        }
    }

    pub(crate) fn pow_raw(&self, base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.modulus;
        let mut b = base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul_raw(acc, b);
            }
            b = self.mul_raw(b, b);
            exp >>= 1;
        }
        acc
    }

    pub(crate) fn inv_raw(&self, a: u64) -> Result<u64, FieldError> {
        if a == 0 {
            return Err(FieldError::DivisionByZero);
        }
        Ok(self.pow_raw(a, self.modulus - 2))
    }

    /// Smallest value at or above which raw 64-bit draws are rejected.
    /// Zero means every draw is accepted (q divides 2^64, i.e. q = 2).
    pub(crate) fn rejection_limit(&self) -> u64 {
        let rem = (u64::MAX % self.modulus + 1) % self.modulus;
        0u64.wrapping_sub(rem)
    }

    /// Maps a raw 64-bit draw to a field element, or `None` if it falls in
    /// the biased tail.
    #[inline]
    pub(crate) fn accept_raw(&self, raw: u64) -> Option<u64> {
        let limit = self.rejection_limit();
        if limit != 0 && raw >= limit {
            None
        } else {
            Some(raw % self.modulus)
        }
    }
}

impl TryFrom<u64> for PrimeField {
    type Error = FieldError;
    fn try_from(q: u64) -> Result<Self, FieldError> {
        PrimeField::new(q)
    }
}

impl From<PrimeField> for u64 {
    fn from(f: PrimeField) -> u64 {
        f.modulus
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.modulus)
    }
}

/// Deterministic Miller-Rabin, exact for every 64-bit input.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(r, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        r
    };
    'witness: for a in SMALL {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// An element of `F_q`, always held as its canonical representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    modulus: u64,
}

impl FieldElement {
    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        PrimeField {
            modulus: self.modulus,
        }
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same_field(&self, other: &Self) -> Result<PrimeField, FieldError> {
        if self.modulus != other.modulus {
            return Err(FieldError::FieldMismatch {
                left: self.modulus,
                right: other.modulus,
            });
        }
        Ok(self.field())
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self, FieldError> {
        let f = self.same_field(&rhs)?;
        Ok(f.elem(f.add_raw(self.value, rhs.value)))
    }

    pub fn checked_sub(self, rhs: Self) -> Result<Self, FieldError> {
        let f = self.same_field(&rhs)?;
        Ok(f.elem(f.sub_raw(self.value, rhs.value)))
    }

    pub fn checked_mul(self, rhs: Self) -> Result<Self, FieldError> {
        let f = self.same_field(&rhs)?;
        Ok(f.elem(f.mul_raw(self.value, rhs.value)))
    }

    pub fn inv(self) -> Result<Self, FieldError> {
        let f = self.field();
        Ok(f.elem(f.inv_raw(self.value)?))
    }

    /// `self^exp` by square-and-multiply. `0^0 = 1`.
    pub fn pow(self, exp: u64) -> Self {
        let f = self.field();
        f.elem(f.pow_raw(self.value, exp))
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $checked:ident, $atr:ident, $am:ident) => {
        impl $tr for FieldElement {
            type Output = FieldElement;
            #[inline]
            fn $m(self, rhs: FieldElement) -> FieldElement {
                self.$checked(rhs).expect("operands from different fields")
            }
        }
        impl $atr for FieldElement {
            #[inline]
            fn $am(&mut self, rhs: FieldElement) {
                *self = self.$checked(rhs).expect("operands from different fields");
            }
        }
    };
}

binop!(Add, add, checked_add, AddAssign, add_assign);
binop!(Sub, sub, checked_sub, SubAssign, sub_assign);
binop!(Mul, mul, checked_mul, MulAssign, mul_assign);

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        let f = self.field();
        f.elem(f.neg_raw(self.value))
    }
}

/// Seedable deterministic source of uniform field elements.
///
/// Backed by ChaCha20 in its native counter mode. A `stream` label selects an
/// independent sequence for the same seed, so that points, masking randomness
/// and latencies never share draws.
#[derive(Debug, Clone)]
pub struct SeededPrg {
    seed: u64,
    rng: ChaCha20Rng,
}

impl SeededPrg {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn fill_bytes(&mut self, out: &mut [u8]) {
        self.rng.fill_bytes(out)
    }

    /// Uniform element of `field`; raw draws in the biased tail are rejected.
    pub fn sample_uniform(&mut self, field: PrimeField) -> FieldElement {
        field.elem(self.sample_raw(field))
    }

    pub(crate) fn sample_raw(&mut self, field: PrimeField) -> u64 {
        loop {
            if let Some(v) = field.accept_raw(self.rng.next_u64()) {
                return v;
            }
        }
    }

    pub fn sample_vec(&mut self, field: PrimeField, len: usize) -> Vec<FieldElement> {
        (0..len).map(|_| self.sample_uniform(field)).collect()
    }

    /// Uniform index in `[0, bound)`.
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0);
        let b = bound as u64;
        let rem = (u64::MAX % b + 1) % b;
        let limit = 0u64.wrapping_sub(rem);
        loop {
            let v = self.rng.next_u64();
            if limit == 0 || v < limit {
                return (v % b) as usize;
            }
        }
    }
}
