//! Arithmetic for the prime field F_q, its additive characters, and exact
//! torus values with denominators q^(k+1).
//!
//! Field elements are plain `u8` values in `0..q`. Torus values are kept as
//! integer numerator / q^level pairs; complex numbers only appear at the
//! analysis boundary.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Primes this crate supports as moduli. Everything downstream enumerates
/// domains exhaustively, so there is no benefit past 31.
pub const SUPPORTED_PRIMES: [u8; 11] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31];

/// A prime modulus q with 2 <= q <= 31.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct PrimeField {
    q: u8,
}

impl PrimeField {
    pub fn new(q: u8) -> Result<Self> {
        if SUPPORTED_PRIMES.contains(&q) {
            Ok(PrimeField { q })
        } else {
            Err(Error::BadModulus(q as u32))
        }
    }

    #[inline]
    pub fn q(&self) -> u8 {
        self.q
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        let s = a as u16 + b as u16;
        (s % self.q as u16) as u8
    }

    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        let s = a as i16 - b as i16;
        s.rem_euclid(self.q as i16) as u8
    }

    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        ((a as u16 * b as u16) % self.q as u16) as u8
    }

    /// a^e by square-and-multiply.
    pub fn pow(&self, a: u8, mut e: u32) -> u8 {
        let mut base = a % self.q;
        let mut acc = 1u8;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of a nonzero element (Fermat).
    pub fn inv(&self, a: u8) -> u8 {
        debug_assert!(!a.is_multiple_of(self.q));
        self.pow(a, self.q as u32 - 2)
    }

    pub fn elements(&self) -> impl Iterator<Item = u8> {
        0..self.q
    }

    /// Additive character e^(2 pi i a / q).
    #[inline]
    pub fn chi(&self, a: u8) -> Complex64 {
        chi(a, self.q)
    }
}

/// Additive character of F_q at e: exp(2 pi i e / q). Unit modulus.
#[inline]
pub fn chi(e: u8, q: u8) -> Complex64 {
    Complex64::from_polar(1.0, TAU * e as f64 / q as f64)
}

/// An element of (1/q^level) Z / Z, stored exactly.
///
/// `level` is k+1 for a depth-k value; the raw denominator q^level is
/// retained even when the fraction is reducible. Depth is capped at 2, so
/// level <= 3 and every numerator fits comfortably in u64.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TorusValue {
    q: u8,
    level: u8,
    num: u64,
}

pub const MAX_DEPTH: u8 = 2;

impl TorusValue {
    /// num / q^level mod 1.
    pub fn new(num: u64, q: u8, level: u8) -> Result<Self> {
        let field = PrimeField::new(q)?;
        if level == 0 || level > MAX_DEPTH + 1 {
            return Err(Error::Invalid(format!(
                "torus level {level} out of range 1..={}",
                MAX_DEPTH + 1
            )));
        }
        let den = (field.q as u64).pow(level as u32);
        Ok(TorusValue {
            q,
            level,
            num: num % den,
        })
    }

    /// The classical embedding x -> x/q.
    pub fn classical(e: u8, q: u8) -> Result<Self> {
        Self::new(e as u64, q, 1)
    }

    pub fn zero(q: u8) -> Self {
        TorusValue { q, level: 1, num: 0 }
    }

    #[inline]
    pub fn q(&self) -> u8 {
        self.q
    }

    #[inline]
    pub fn level(&self) -> u8 {
        self.level
    }

    #[inline]
    pub fn numerator(&self) -> u64 {
        self.num
    }

    #[inline]
    pub fn denominator(&self) -> u64 {
        (self.q as u64).pow(self.level as u32)
    }

    /// gcd-reduced (numerator, denominator) view; the raw pair is unchanged.
    pub fn reduced(&self) -> (u64, u64) {
        let mut num = self.num;
        let mut den = self.denominator();
        while num != 0 && num.is_multiple_of(self.q as u64) && den.is_multiple_of(self.q as u64) {
            num /= self.q as u64;
            den /= self.q as u64;
        }
        if num == 0 {
            (0, 1)
        } else {
            (num, den)
        }
    }

    fn lift(&self, level: u8) -> u64 {
        debug_assert!(level >= self.level);
        self.num * (self.q as u64).pow((level - self.level) as u32)
    }

    pub fn add(&self, other: &TorusValue) -> Result<TorusValue> {
        if self.q != other.q {
            return Err(Error::FieldMismatch(self.q, other.q));
        }
        let level = self.level.max(other.level);
        let den = (self.q as u64).pow(level as u32);
        Ok(TorusValue {
            q: self.q,
            level,
            num: (self.lift(level) + other.lift(level)) % den,
        })
    }

    pub fn sub(&self, other: &TorusValue) -> Result<TorusValue> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> TorusValue {
        let den = self.denominator();
        TorusValue {
            q: self.q,
            level: self.level,
            num: (den - self.num) % den,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// exp(2 pi i t). Agrees with `chi` under the classical embedding.
    pub fn exp(&self) -> Complex64 {
        Complex64::from_polar(1.0, TAU * self.num as f64 / self.denominator() as f64)
    }
}

impl PartialEq for TorusValue {
    /// Equality as elements of the torus, i.e. after lifting to the common
    /// denominator. 1/2 and 2/4 over q=2 compare equal.
    fn eq(&self, other: &Self) -> bool {
        if self.q != other.q {
            return false;
        }
        let level = self.level.max(other.level);
        self.lift(level) == other.lift(level)
    }
}

impl Eq for TorusValue {}

/// Exact torus addition. Errors on mismatched moduli.
pub fn torus_add(a: &TorusValue, b: &TorusValue) -> Result<TorusValue> {
    a.add(b)
}

/// exp(2 pi i t) for a torus value.
pub fn torus_exp(t: &TorusValue) -> Complex64 {
    t.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-9
    }

    #[test]
    fn chi_small_values() {
        assert!(close(chi(0, 2), Complex64::new(1.0, 0.0)));
        assert!(close(chi(1, 2), Complex64::new(-1.0, 0.0)));
        // exp(2 pi i / 3) in double precision
        assert!(close(chi(1, 3), Complex64::new(-0.5, 0.8660254037844386)));
    }

    #[test]
    fn chi_is_a_character() {
        for &q in &SUPPORTED_PRIMES {
            let f = PrimeField::new(q).unwrap();
            for a in 0..q {
                for b in 0..q {
                    let lhs = chi(f.add(a, b), q);
                    let rhs = chi(a, q) * chi(b, q);
                    assert!((lhs - rhs).norm() < EPS, "q={q} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn character_sum_vanishes() {
        for &q in &SUPPORTED_PRIMES {
            let sum: Complex64 = (0..q).map(|e| chi(e, q)).sum();
            assert!(sum.norm() < EPS, "q={q} sum={sum}");
        }
    }

    #[test]
    fn torus_exp_matches_chi_at_level_one() {
        for &q in &[2u8, 3, 5] {
            for e in 0..q {
                let t = TorusValue::classical(e, q).unwrap();
                assert!(close(t.exp(), chi(e, q)));
            }
        }
    }

    #[test]
    fn torus_exp_quarter_turns() {
        let t0 = TorusValue::new(0, 2, 1).unwrap();
        assert!(close(t0.exp(), Complex64::new(1.0, 0.0)));
        let quarter = TorusValue::new(1, 2, 2).unwrap();
        assert!(close(quarter.exp(), Complex64::new(0.0, 1.0)));
        let three_quarters = TorusValue::new(3, 2, 2).unwrap();
        assert!(close(three_quarters.exp(), Complex64::new(0.0, -1.0)));
    }

    #[test]
    fn torus_add_examples() {
        let half = TorusValue::classical(1, 2).unwrap();
        assert!(torus_add(&half, &half).unwrap().is_zero());

        let quarter = TorusValue::new(1, 2, 2).unwrap();
        let sum = torus_add(&quarter, &quarter).unwrap();
        assert_eq!(sum, half);

        // lift 1/2 to denominator 4 and add
        let s = torus_add(&quarter, &half).unwrap();
        assert_eq!(s.numerator(), 3);
        assert_eq!(s.denominator(), 4);
    }

    #[test]
    fn torus_add_is_homomorphic_under_exp() {
        let vals = [
            TorusValue::new(1, 3, 2).unwrap(),
            TorusValue::new(5, 3, 2).unwrap(),
            TorusValue::new(2, 3, 1).unwrap(),
            TorusValue::new(26, 3, 3).unwrap(),
        ];
        for a in &vals {
            for b in &vals {
                let lhs = torus_add(a, b).unwrap().exp();
                let rhs = a.exp() * b.exp();
                assert!((lhs - rhs).norm() < EPS);
            }
        }
    }

    #[test]
    fn torus_add_rejects_mixed_moduli() {
        let a = TorusValue::classical(1, 2).unwrap();
        let b = TorusValue::classical(1, 3).unwrap();
        assert!(torus_add(&a, &b).is_err());
    }

    #[test]
    fn reduced_view_keeps_raw_denominator() {
        let t = TorusValue::new(2, 2, 2).unwrap(); // 2/4
        assert_eq!(t.reduced(), (1, 2));
        assert_eq!(t.denominator(), 4);
    }

    #[test]
    fn rejects_bad_moduli() {
        assert!(PrimeField::new(4).is_err());
        assert!(PrimeField::new(1).is_err());
        assert!(PrimeField::new(37).is_err());
    }
}
