//! Scalar types that report a rigorous bound on their own rounding error.

use super::bigfloat::BigFloat;
use super::mag::{Mag, Radius};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
use std::fmt::Debug;

/// A floating-point scalar whose operations return `(rounded, error bound)`.
pub trait Real: Clone + Debug + Send + Sync + 'static {
    type Rad: Radius;

    /// Bits of mantissa used for results, `0` for exact constants.
    fn precision(&self) -> u32;
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_i64_prec(v: i64, prec: u32) -> (Self, Self::Rad);
    fn from_rational(q: &BigRational, prec: u32) -> (Self, Self::Rad);
    fn from_bigfloat(x: &BigFloat, prec: u32) -> (Self, Self::Rad);
    fn to_rational(&self) -> BigRational;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> (Self, Self::Rad);
    fn sub(&self, o: &Self) -> (Self, Self::Rad);
    fn mul(&self, o: &Self) -> (Self, Self::Rad);
    fn div(&self, o: &Self) -> (Self, Self::Rad);
    fn neg(&self) -> Self;
    fn mul_pow2(&self, k: i64) -> (Self, Self::Rad);
    fn abs_hi(&self) -> Self::Rad;
    fn abs_lo(&self) -> Self::Rad;
    /// Re-tag (and round) to a working precision.
    fn with_precision(&self, prec: u32) -> (Self, Self::Rad);
    /// Whether centres of width `prec` can be represented by this type.
    fn supports_precision(prec: u32) -> bool;
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn f64_err(v: f64, err: f64) -> f64 {
    if !v.is_finite() || err.is_nan() {
        return f64::INFINITY;
    }
    let e = err.abs();
    if v != 0.0 && v.abs() < 1e-290 {
        return e + f64::MIN_POSITIVE;
    }
    e
}

impl Real for f64 {
    type Rad = f64;

    fn precision(&self) -> u32 {
        53
    }
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn from_i64_prec(v: i64, _prec: u32) -> (Self, f64) {
        let x = v as f64;
        let back = (x as i128 - v as i128).unsigned_abs() as f64;
        (x, back)
    }
    fn from_rational(q: &BigRational, _prec: u32) -> (Self, f64) {
        let (bf, e) = BigFloat::from_rational(q, 80);
        let (x, e2) = Self::from_bigfloat(&bf, 53);
        (x, e.to_f64().next_up().add_up(e2))
    }
    fn from_bigfloat(x: &BigFloat, _prec: u32) -> (Self, f64) {
        if x.is_zero() {
            return (0.0, 0.0);
        }
        if x.top() > 1020 {
            return (0.0, f64::INFINITY);
        }
        let (r, e) = x.round_to(53);
        if r.top() < -1020 {
            let err = r.mag_hi().add_up(e);
            return (0.0, f64::from_mag_up(err).max(f64::MIN_POSITIVE));
        }
        let v = r.to_f64();
        (v, f64::from_mag_up(e))
    }
    fn to_rational(&self) -> BigRational {
        BigRational::from_f64(*self).expect("finite")
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> (Self, f64) {
        let (s, e) = two_sum(*self, *o);
        (s, f64_err(s, e))
    }
    fn sub(&self, o: &Self) -> (Self, f64) {
        let (s, e) = two_sum(*self, -*o);
        (s, f64_err(s, e))
    }
    fn mul(&self, o: &Self) -> (Self, f64) {
        if *self == 0.0 || *o == 0.0 {
            return (0.0, 0.0);
        }
        let p = self * o;
        let e = self.mul_add(*o, -p);
        if p == 0.0 {
            return (0.0, f64::MIN_POSITIVE);
        }
        (p, f64_err(p, e))
    }
    fn div(&self, o: &Self) -> (Self, f64) {
        if *self == 0.0 {
            return (0.0, 0.0);
        }
        let q = self / o;
        if !q.is_finite() {
            return (0.0, f64::INFINITY);
        }
        let r = (-q).mul_add(*o, *self);
        let e = r.abs().div_up(o.abs());
        (q, f64_err(q, e).max(e))
    }
    fn neg(&self) -> Self {
        -*self
    }
    fn mul_pow2(&self, k: i64) -> (Self, f64) {
        let v = super::mag::ldexp(*self, k);
        if *self != 0.0 && (v == 0.0 || v.abs() < 1e-300) {
            return (v, f64::MIN_POSITIVE.max(v.abs()));
        }
        if !v.is_finite() {
            return (0.0, f64::INFINITY);
        }
        (v, 0.0)
    }
    fn abs_hi(&self) -> f64 {
        self.abs()
    }
    fn abs_lo(&self) -> f64 {
        self.abs()
    }
    fn with_precision(&self, _prec: u32) -> (Self, f64) {
        (*self, 0.0)
    }
    fn supports_precision(prec: u32) -> bool {
        prec <= 53
    }
}

impl Real for BigFloat {
    type Rad = Mag;

    fn precision(&self) -> u32 {
        BigFloat::precision(self)
    }
    fn zero() -> Self {
        BigFloat::zero()
    }
    fn one() -> Self {
        BigFloat::from_i64(1)
    }
    fn is_zero(&self) -> bool {
        BigFloat::is_zero(self)
    }
    fn from_i64_prec(v: i64, prec: u32) -> (Self, Mag) {
        BigFloat::from_parts(BigInt::from(v), 0, prec).round_to(prec)
    }
    fn from_rational(q: &BigRational, prec: u32) -> (Self, Mag) {
        if q.is_zero() {
            return (BigFloat::zero().with_prec_tag(prec), Mag::ZERO);
        }
        BigFloat::from_rational(q, prec)
    }
    fn from_bigfloat(x: &BigFloat, prec: u32) -> (Self, Mag) {
        x.clone().with_prec_tag(prec).round_to(prec)
    }
    fn to_rational(&self) -> BigRational {
        BigFloat::to_rational(self)
    }
    fn to_f64(&self) -> f64 {
        BigFloat::to_f64(self)
    }
    fn add(&self, o: &Self) -> (Self, Mag) {
        BigFloat::add(self, o)
    }
    fn sub(&self, o: &Self) -> (Self, Mag) {
        BigFloat::sub(self, o)
    }
    fn mul(&self, o: &Self) -> (Self, Mag) {
        BigFloat::mul(self, o)
    }
    fn div(&self, o: &Self) -> (Self, Mag) {
        BigFloat::div(self, o)
    }
    fn neg(&self) -> Self {
        BigFloat::neg(self)
    }
    fn mul_pow2(&self, k: i64) -> (Self, Mag) {
        (BigFloat::mul_pow2(self, k), Mag::ZERO)
    }
    fn abs_hi(&self) -> Mag {
        self.mag_hi()
    }
    fn abs_lo(&self) -> Mag {
        self.mag_lo()
    }
    fn with_precision(&self, prec: u32) -> (Self, Mag) {
        self.clone().with_prec_tag(prec).round_to(prec)
    }
    fn supports_precision(_prec: u32) -> bool {
        true
    }
}
