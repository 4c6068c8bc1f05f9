//! Non-negative magnitudes with directed rounding.
//!
//! [`Radius`] is the radius type carried by a [`Ball`](super::Ball). Two
//! implementations exist: plain `f64` (rounded outward with `next_up`) and
//! [`Mag`], an `f64` mantissa paired with an `i64` exponent so that radii of
//! size `2^-5000` are still representable.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::cmp::Ordering;
use std::fmt;

/// Multiply `x` by `2^e` exactly when the result is a normal number.
pub fn ldexp(x: f64, e: i64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mut x = x;
    let mut e = e.clamp(-3000, 3000);
    while e > 1000 {
        x *= f64::from_bits(((1000 + 1023) as u64) << 52);
        e -= 1000;
    }
    while e < -1000 {
        x *= f64::from_bits(((-1000 + 1023) as u64) << 52);
        e += 1000;
    }
    x * f64::from_bits(((e + 1023) as u64) << 52)
}

/// Split a finite nonzero `x` into `(m, e)` with `x = m 2^e` and `0.5 <= |m| < 1`.
pub fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let bits = x.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        let (m, e) = frexp(x * f64::from_bits(((64 + 1023) as u64) << 52));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1022u64 << 52));
    (m, raw - 1022)
}

/// Magnitude arithmetic rounded in a chosen direction.
pub trait Radius: Copy + Clone + fmt::Debug + PartialOrd + Send + Sync + 'static {
    fn zero() -> Self;
    fn infinity() -> Self;
    fn from_f64_up(x: f64) -> Self;
    fn from_f64_down(x: f64) -> Self;
    fn from_mag_up(m: Mag) -> Self;
    fn from_mag_down(m: Mag) -> Self;
    fn to_mag(self) -> Mag;
    fn pow2(e: i64) -> Self;
    fn add_up(self, o: Self) -> Self;
    fn add_down(self, o: Self) -> Self;
    /// `max(self - o, 0)` rounded down.
    fn sub_down(self, o: Self) -> Self;
    fn sub_up(self, o: Self) -> Self;
    fn mul_up(self, o: Self) -> Self;
    fn mul_down(self, o: Self) -> Self;
    fn div_up(self, o: Self) -> Self;
    fn div_down(self, o: Self) -> Self;
    fn sqrt_up(self) -> Self;
    fn sqrt_down(self) -> Self;
    fn is_zero(&self) -> bool;
    fn is_finite(&self) -> bool;
    /// Nearest `f64`, saturating to 0 or infinity.
    fn to_f64(self) -> f64;
    /// Approximate base-2 logarithm; `-inf` for zero.
    fn log2(self) -> f64;

    fn max_of(self, o: Self) -> Self {
        if o > self {
            o
        } else {
            self
        }
    }
    fn min_of(self, o: Self) -> Self {
        if o < self {
            o
        } else {
            self
        }
    }
    fn to_rational_opt(self) -> Option<BigRational> {
        self.to_mag().to_rational()
    }
}

fn up(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else if x == f64::INFINITY {
        x
    } else {
        x.next_up()
    }
}

fn down(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        0.0
    } else {
        x.next_down().max(0.0)
    }
}

impl Radius for f64 {
    fn zero() -> Self {
        0.0
    }
    fn infinity() -> Self {
        f64::INFINITY
    }
    fn from_f64_up(x: f64) -> Self {
        x.abs()
    }
    fn from_f64_down(x: f64) -> Self {
        x.abs()
    }
    fn from_mag_up(m: Mag) -> Self {
        if m.m == 0.0 {
            return 0.0;
        }
        if m.e > 1024 || m.m.is_infinite() {
            return f64::INFINITY;
        }
        if m.e < -1021 {
            return f64::MIN_POSITIVE;
        }
        up(ldexp(m.m, m.e))
    }
    fn from_mag_down(m: Mag) -> Self {
        if m.m == 0.0 || m.e < -1020 {
            return 0.0;
        }
        if m.e > 1024 || m.m.is_infinite() {
            return f64::MAX;
        }
        down(ldexp(m.m, m.e))
    }
    fn to_mag(self) -> Mag {
        Mag::from_f64(self)
    }
    fn pow2(e: i64) -> Self {
        if e > 1023 {
            f64::INFINITY
        } else if e < -1022 {
            0.0
        } else {
            ldexp(1.0, e)
        }
    }
    fn add_up(self, o: Self) -> Self {
        if o == 0.0 {
            return self;
        }
        if self == 0.0 {
            return o;
        }
        up(self + o)
    }
    fn add_down(self, o: Self) -> Self {
        if o == 0.0 {
            return self;
        }
        if self == 0.0 {
            return o;
        }
        down(self + o)
    }
    fn sub_down(self, o: Self) -> Self {
        if o == 0.0 {
            return self;
        }
        down(self - o)
    }
    fn sub_up(self, o: Self) -> Self {
        if o == 0.0 {
            return self;
        }
        up(self - o).max(0.0)
    }
    fn mul_up(self, o: Self) -> Self {
        if self == 0.0 || o == 0.0 {
            return 0.0;
        }
        let p = self * o;
        if p == 0.0 {
            return f64::MIN_POSITIVE;
        }
        up(p)
    }
    fn mul_down(self, o: Self) -> Self {
        down(self * o)
    }
    fn div_up(self, o: Self) -> Self {
        if self == 0.0 {
            return 0.0;
        }
        if o == 0.0 {
            return f64::INFINITY;
        }
        let q = self / o;
        if q == 0.0 {
            return f64::MIN_POSITIVE;
        }
        up(q)
    }
    fn div_down(self, o: Self) -> Self {
        if o == f64::INFINITY {
            return 0.0;
        }
        down(self / o)
    }
    fn sqrt_up(self) -> Self {
        if self == 0.0 {
            return 0.0;
        }
        up(self.sqrt())
    }
    fn sqrt_down(self) -> Self {
        down(self.sqrt())
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn log2(self) -> f64 {
        f64::log2(self)
    }
}

/// Extended-range non-negative magnitude `m * 2^e`.
///
/// Normalised so that `m` is `0`, `+inf`, or lies in `[0.5, 1)`.
#[derive(Clone, Copy)]
pub struct Mag {
    m: f64,
    e: i64,
}

impl fmt::Debug for Mag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.m == 0.0 {
            write!(f, "Mag(0)")
        } else if self.m.is_infinite() {
            write!(f, "Mag(inf)")
        } else {
            write!(f, "Mag(2^{:.3})", self.log2())
        }
    }
}

impl Mag {
    pub const ZERO: Mag = Mag { m: 0.0, e: 0 };
    pub const INF: Mag = Mag {
        m: f64::INFINITY,
        e: 0,
    };

    fn norm(m: f64, e: i64) -> Mag {
        if m == 0.0 || m.is_nan() {
            return Mag::ZERO;
        }
        if m.is_infinite() {
            return Mag::INF;
        }
        let (mm, ee) = frexp(m.abs());
        Mag::norm_raw(mm, e.saturating_add(ee))
    }

    fn norm_raw(m: f64, e: i64) -> Mag {
        if e > (1i64 << 60) {
            Mag::INF
        } else if e < -(1i64 << 60) {
            Mag::ZERO
        } else {
            Mag { m, e }
        }
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(x: f64) -> Mag {
        if x.is_nan() {
            return Mag::INF;
        }
        Mag::norm(x.abs(), 0)
    }

    pub fn mantissa_exponent(self) -> (f64, i64) {
        (self.m, self.e)
    }

    pub fn is_inf(&self) -> bool {
        self.m.is_infinite()
    }

    /// Upper bound for `|x|` where `x = mant * 2^exp`.
    pub fn from_bigint_up(mant: &BigInt, exp: i64) -> Mag {
        let bits = mant.bits();
        if bits == 0 {
            return Mag::ZERO;
        }
        if bits <= 53 {
            let v: f64 = num_traits::ToPrimitive::to_f64(&mant.magnitude().clone()).unwrap();
            return Mag::norm(v, exp);
        }
        let sh = bits - 53;
        let top = (mant.magnitude() >> sh) + 1u32;
        let v: f64 = num_traits::ToPrimitive::to_f64(&top).unwrap();
        Mag::norm(v, exp + sh as i64)
    }

    /// Lower bound for `|x|` where `x = mant * 2^exp`.
    pub fn from_bigint_down(mant: &BigInt, exp: i64) -> Mag {
        let bits = mant.bits();
        if bits == 0 {
            return Mag::ZERO;
        }
        let sh = bits.saturating_sub(53);
        let top = mant.magnitude() >> sh;
        let v: f64 = num_traits::ToPrimitive::to_f64(&top).unwrap();
        Mag::norm(v, exp + sh as i64)
    }

    pub fn to_rational(self) -> Option<BigRational> {
        if self.is_inf() {
            return None;
        }
        if self.m == 0.0 {
            return Some(BigRational::zero());
        }
        let mi = ldexp(self.m, 53) as i64;
        let e = self.e - 53;
        let n = BigInt::from(mi);
        Some(if e >= 0 {
            BigRational::from_integer(n << e as usize)
        } else {
            BigRational::new(n, BigInt::one() << (-e) as usize)
        })
    }

    fn align(a: Mag, b: Mag) -> (f64, f64, i64) {
        let e = a.e.max(b.e);
        let sa = if a.e - e < -1060 { 0.0 } else { ldexp(a.m, a.e - e) };
        let sb = if b.e - e < -1060 { 0.0 } else { ldexp(b.m, b.e - e) };
        (sa, sb, e)
    }
}

impl PartialEq for Mag {
    fn eq(&self, o: &Mag) -> bool {
        self.partial_cmp(o) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Mag {
    fn partial_cmp(&self, o: &Mag) -> Option<Ordering> {
        let az = self.m == 0.0;
        let bz = o.m == 0.0;
        if az || bz {
            return Some(match (az, bz) {
                (true, true) => Ordering::Equal,
                (true, false) => Ordering::Less,
                _ => Ordering::Greater,
            });
        }
        match (self.is_inf(), o.is_inf()) {
            (true, true) => return Some(Ordering::Equal),
            (true, false) => return Some(Ordering::Greater),
            (false, true) => return Some(Ordering::Less),
            _ => {}
        }
        Some(self.e.cmp(&o.e).then(self.m.partial_cmp(&o.m).unwrap()))
    }
}

impl Radius for Mag {
    fn zero() -> Self {
        Mag::ZERO
    }
    fn infinity() -> Self {
        Mag::INF
    }
    fn from_f64_up(x: f64) -> Self {
        Mag::from_f64(x)
    }
    fn from_f64_down(x: f64) -> Self {
        Mag::from_f64(x)
    }
    fn from_mag_up(m: Mag) -> Self {
        m
    }
    fn from_mag_down(m: Mag) -> Self {
        m
    }
    fn to_mag(self) -> Mag {
        self
    }
    fn pow2(e: i64) -> Self {
        Mag::norm_raw(0.5, e.saturating_add(1))
    }
    fn add_up(self, o: Self) -> Self {
        if o.m == 0.0 {
            return self;
        }
        if self.m == 0.0 {
            return o;
        }
        if self.is_inf() || o.is_inf() {
            return Mag::INF;
        }
        let (a, b, e) = Mag::align(self, o);
        if a == 0.0 || b == 0.0 {
            return Mag::norm(up(a.max(b)), e);
        }
        Mag::norm(up(a + b), e)
    }
    fn add_down(self, o: Self) -> Self {
        if o.m == 0.0 {
            return self;
        }
        if self.m == 0.0 {
            return o;
        }
        if self.is_inf() || o.is_inf() {
            return Mag::INF;
        }
        let (a, b, e) = Mag::align(self, o);
        Mag::norm(down(a + b), e)
    }
    fn sub_down(self, o: Self) -> Self {
        if o.m == 0.0 {
            return self;
        }
        if self.is_inf() && !o.is_inf() {
            return Mag::INF;
        }
        if o.is_inf() || self <= o {
            return Mag::ZERO;
        }
        let (a, b, e) = Mag::align(self, o);
        if b == 0.0 {
            return Mag::norm(down(a), e);
        }
        Mag::norm(down(a - b), e)
    }
    fn sub_up(self, o: Self) -> Self {
        if o.m == 0.0 {
            return self;
        }
        if self.is_inf() {
            return Mag::INF;
        }
        if self <= o {
            return Mag::ZERO;
        }
        let (a, b, e) = Mag::align(self, o);
        Mag::norm(up(a - b), e)
    }
    fn mul_up(self, o: Self) -> Self {
        if self.m == 0.0 || o.m == 0.0 {
            return Mag::ZERO;
        }
        Mag::norm(up(self.m * o.m), self.e.saturating_add(o.e))
    }
    fn mul_down(self, o: Self) -> Self {
        if self.m == 0.0 || o.m == 0.0 {
            return Mag::ZERO;
        }
        Mag::norm(down(self.m * o.m), self.e.saturating_add(o.e))
    }
    fn div_up(self, o: Self) -> Self {
        if self.m == 0.0 {
            return Mag::ZERO;
        }
        if o.m == 0.0 || self.is_inf() {
            return Mag::INF;
        }
        if o.is_inf() {
            return Mag::ZERO;
        }
        Mag::norm(up(self.m / o.m), self.e.saturating_sub(o.e))
    }
    fn div_down(self, o: Self) -> Self {
        if self.m == 0.0 || o.is_inf() {
            return Mag::ZERO;
        }
        if o.m == 0.0 || self.is_inf() {
            return Mag::INF;
        }
        Mag::norm(down(self.m / o.m), self.e.saturating_sub(o.e))
    }
    fn sqrt_up(self) -> Self {
        if self.m == 0.0 || self.is_inf() {
            return self;
        }
        let (m, e) = if self.e % 2 == 0 {
            (self.m, self.e)
        } else {
            (self.m * 2.0, self.e - 1)
        };
        Mag::norm(up(m.sqrt()), e / 2)
    }
    fn sqrt_down(self) -> Self {
        if self.m == 0.0 || self.is_inf() {
            return self;
        }
        let (m, e) = if self.e % 2 == 0 {
            (self.m, self.e)
        } else {
            (self.m * 2.0, self.e - 1)
        };
        Mag::norm(down(m.sqrt()), e / 2)
    }
    fn is_zero(&self) -> bool {
        self.m == 0.0
    }
    fn is_finite(&self) -> bool {
        !self.is_inf()
    }
    fn to_f64(self) -> f64 {
        if self.m == 0.0 {
            0.0
        } else if self.is_inf() || self.e > 1024 {
            f64::INFINITY
        } else if self.e < -1074 {
            0.0
        } else {
            ldexp(self.m, self.e)
        }
    }
    fn log2(self) -> f64 {
        if self.m == 0.0 {
            f64::NEG_INFINITY
        } else if self.is_inf() {
            f64::INFINITY
        } else {
            self.m.log2() + self.e as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frexp_roundtrip() {
        for &x in &[1.0, 0.75, 3.0e-310, 1.0e300, 12345.678] {
            let (m, e) = frexp(x);
            assert!((0.5..1.0).contains(&m));
            assert_eq!(ldexp(m, e), x);
        }
    }

    #[test]
    fn mag_extended_range() {
        let a = Mag::pow2(-4000);
        let b = a.mul_up(a);
        assert!((b.log2() + 8000.0).abs() < 1e-9);
        assert_eq!(b.to_f64(), 0.0);
        assert!(b > Mag::ZERO);
    }

    #[test]
    fn mag_directed() {
        let a = Mag::from_f64(1.0);
        let b = Mag::from_f64(3.0);
        let q_hi = a.div_up(b);
        let q_lo = a.div_down(b);
        assert!(q_lo < q_hi);
        let third = BigRational::new(1.into(), 3.into());
        assert!(q_lo.to_rational().unwrap() < third);
        assert!(q_hi.to_rational().unwrap() > third);
    }

    #[test]
    fn mag_sub_saturates() {
        let a = Mag::from_f64(1.0);
        let b = Mag::from_f64(2.0);
        assert!(a.sub_down(b).is_zero());
        assert_eq!(b.sub_down(Mag::pow2(-500)), b.sub_down(Mag::pow2(-500)));
        assert!(b.sub_down(Mag::pow2(-500)) < b);
    }

    #[test]
    fn bigint_bounds() {
        let x = (BigInt::from(1) << 200u32) + BigInt::from(12345);
        let lo = Mag::from_bigint_down(&x, -10);
        let hi = Mag::from_bigint_up(&x, -10);
        let exact = BigRational::new(x, BigInt::from(1024));
        assert!(lo.to_rational().unwrap() <= exact);
        assert!(hi.to_rational().unwrap() >= exact);
    }
}
