//! Arbitrary-precision binary floating point.

use super::mag::{Mag, Radius};
use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

/// A dyadic number `mant * 2^exp` tagged with a working precision in bits.
///
/// The mantissa is kept odd (or zero) so equal values have equal
/// representations. A precision of `0` marks an exact constant; operations
/// round to the larger precision of their operands and report the rounding
/// error alongside the result.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BigFloat {
    mant: BigInt,
    exp: i64,
    prec: u32,
}

impl fmt::Debug for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}[p{}]", self.to_f64(), self.prec)
    }
}

impl BigFloat {
    pub fn zero() -> Self {
        BigFloat {
            mant: BigInt::zero(),
            exp: 0,
            prec: 0,
        }
    }

    /// Exact dyadic `mant * 2^exp`.
    pub fn from_parts(mant: BigInt, exp: i64, prec: u32) -> Self {
        let mut x = BigFloat { mant, exp, prec };
        x.canonicalize();
        x
    }

    pub fn from_i64(v: i64) -> Self {
        Self::from_parts(BigInt::from(v), 0, 0)
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite f64");
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.to_bits();
        let raw = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw - 1075)
        };
        let mant = if x < 0.0 {
            -BigInt::from(m)
        } else {
            BigInt::from(m)
        };
        Self::from_parts(mant, e, 0)
    }

    fn canonicalize(&mut self) {
        if self.mant.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.mant.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mant >>= tz as usize;
            self.exp += tz as i64;
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }
    pub fn exponent(&self) -> i64 {
        self.exp
    }
    pub fn precision(&self) -> u32 {
        self.prec
    }
    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }
    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn with_prec_tag(mut self, prec: u32) -> Self {
        self.prec = prec;
        self
    }

    /// Position of the bit just above the leading one: `|x| < 2^top`.
    pub fn top(&self) -> i64 {
        self.exp + self.mant.bits() as i64
    }

    /// Round `mant * 2^exp` to `prec` bits, half away from zero.
    fn round_parts(mant: BigInt, exp: i64, prec: u32) -> (BigFloat, Mag) {
        let bits = mant.bits();
        if prec == 0 || bits <= prec as u64 {
            return (BigFloat::from_parts(mant, exp, prec), Mag::ZERO);
        }
        let sh = bits - prec as u64;
        let (sign, mag) = mant.into_parts();
        let half_bit = mag.bit(sh - 1);
        let mut q: BigUint = &mag >> sh;
        let exact_half_or_more = half_bit;
        if exact_half_or_more {
            q += 1u32;
        }
        let lost_nonzero = mag.trailing_zeros().map(|t| t < sh).unwrap_or(false);
        let err = if lost_nonzero {
            Mag::pow2(exp + sh as i64 - 1)
        } else {
            Mag::ZERO
        };
        let out = BigFloat::from_parts(BigInt::from_biguint(sign, q), exp + sh as i64, prec);
        (out, err)
    }

    /// Round to a (possibly smaller) precision.
    pub fn round_to(&self, prec: u32) -> (BigFloat, Mag) {
        Self::round_parts(self.mant.clone(), self.exp, prec)
    }

    pub fn neg(&self) -> BigFloat {
        BigFloat {
            mant: -&self.mant,
            exp: self.exp,
            prec: self.prec,
        }
    }

    pub fn abs(&self) -> BigFloat {
        BigFloat {
            mant: self.mant.abs(),
            exp: self.exp,
            prec: self.prec,
        }
    }

    pub fn mul_pow2(&self, k: i64) -> BigFloat {
        if self.is_zero() {
            return self.clone();
        }
        BigFloat {
            mant: self.mant.clone(),
            exp: self.exp + k,
            prec: self.prec,
        }
    }

    pub fn add(&self, o: &BigFloat) -> (BigFloat, Mag) {
        let prec = self.prec.max(o.prec);
        if o.is_zero() {
            return self.round_to(prec);
        }
        if self.is_zero() {
            return o.round_to(prec);
        }
        let (hi, lo) = if self.top() >= o.top() {
            (self, o)
        } else {
            (o, self)
        };
        if prec > 0 && lo.top() < hi.top() - prec as i64 - 4 && lo.top() < hi.exp {
            let (r, e) = hi.round_to(prec);
            let lo_mag = Mag::from_bigint_up(&lo.mant, lo.exp);
            return (r, e.add_up(lo_mag));
        }
        let e = self.exp.min(o.exp);
        let a = &self.mant << (self.exp - e) as usize;
        let b = &o.mant << (o.exp - e) as usize;
        Self::round_parts(a + b, e, prec)
    }

    pub fn sub(&self, o: &BigFloat) -> (BigFloat, Mag) {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &BigFloat) -> (BigFloat, Mag) {
        let prec = self.prec.max(o.prec);
        if self.is_zero() || o.is_zero() {
            return (BigFloat::zero().with_prec_tag(prec), Mag::ZERO);
        }
        Self::round_parts(&self.mant * &o.mant, self.exp + o.exp, prec)
    }

    /// Quotient rounded to `max(prec)` bits; exact-precision operands use 64 bits.
    pub fn div(&self, o: &BigFloat) -> (BigFloat, Mag) {
        assert!(!o.is_zero(), "division by zero");
        let mut prec = self.prec.max(o.prec);
        if prec == 0 {
            prec = 64;
        }
        if self.is_zero() {
            return (BigFloat::zero().with_prec_tag(prec), Mag::ZERO);
        }
        let k = (prec as i64 + 2 + o.mant.bits() as i64 - self.mant.bits() as i64).max(0);
        let num = &self.mant << k as usize;
        let (q, r) = num.div_rem(&o.mant);
        let qe = self.exp - k - o.exp;
        let err1 = if r.is_zero() {
            Mag::ZERO
        } else {
            Mag::pow2(qe)
        };
        let (out, err2) = Self::round_parts(q, qe, prec);
        (out, err1.add_up(err2))
    }

    /// Nearest rational rounded to `prec` bits.
    pub fn from_rational(q: &BigRational, prec: u32) -> (BigFloat, Mag) {
        let prec = if prec == 0 { 64 } else { prec };
        let n = BigFloat::from_parts(q.numer().clone(), 0, prec);
        if q.denom().is_one() {
            return n.round_to(prec);
        }
        let d = BigFloat::from_parts(q.denom().clone(), 0, prec);
        if d.mant.is_one() {
            return n.mul_pow2(-d.exp).round_to(prec);
        }
        n.div(&d)
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.mant << self.exp as usize)
        } else {
            BigRational::new(self.mant.clone(), BigInt::one() << (-self.exp) as usize)
        }
    }

    /// Nearest `f64` (saturating to infinity / zero).
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits();
        let (top, e) = if bits > 60 {
            let sh = bits - 60;
            ((&self.mant >> sh as usize), self.exp + sh as i64)
        } else {
            (self.mant.clone(), self.exp)
        };
        let v = top.to_f64().unwrap();
        super::mag::ldexp(v, e)
    }

    pub fn mag_hi(&self) -> Mag {
        Mag::from_bigint_up(&self.mant, self.exp)
    }
    pub fn mag_lo(&self) -> Mag {
        Mag::from_bigint_down(&self.mant, self.exp)
    }

    /// `floor(self)` as a big integer.
    pub fn floor_int(&self) -> BigInt {
        if self.exp >= 0 {
            &self.mant << self.exp as usize
        } else {
            self.mant.clone() >> (-self.exp) as usize
        }
    }

    pub fn sign(&self) -> Sign {
        self.mant.sign()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn exact_ops_have_zero_error() {
        let a = BigFloat::from_f64(0.75).with_prec_tag(64);
        let b = BigFloat::from_f64(-1.5).with_prec_tag(64);
        let (s, e) = a.add(&b);
        assert!(e.is_zero());
        assert_eq!(s.to_f64(), -0.75);
        let (p, e) = a.mul(&b);
        assert!(e.is_zero());
        assert_eq!(p.to_f64(), -1.125);
    }

    #[test]
    fn rounding_error_bounds_truth() {
        let third = q(1, 3);
        for prec in [16u32, 53, 200] {
            let (x, e) = BigFloat::from_rational(&third, prec);
            let diff = (x.to_rational() - &third).abs();
            assert!(diff <= e.to_rational().unwrap());
            assert!(e.log2() <= -(prec as f64) + 1.0);
        }
    }

    #[test]
    fn wide_exponent_gap_add() {
        let a = BigFloat::from_i64(1).with_prec_tag(64);
        let b = BigFloat::from_parts(BigInt::from(3), -5000, 64);
        let (s, e) = a.add(&b);
        let diff = (s.to_rational() - a.to_rational() - b.to_rational()).abs();
        assert!(diff <= e.to_rational().unwrap());
    }

    #[test]
    fn division() {
        let a = BigFloat::from_i64(2).with_prec_tag(100);
        let b = BigFloat::from_i64(7);
        let (x, e) = a.div(&b);
        let diff = (x.to_rational() - q(2, 7)).abs();
        assert!(diff <= e.to_rational().unwrap());
        assert!(e.log2() < -98.0);
    }

    #[test]
    fn canonical_form() {
        let a = BigFloat::from_parts(BigInt::from(12), 0, 10);
        let b = BigFloat::from_parts(BigInt::from(3), 2, 10);
        assert_eq!(a, b);
    }
}
