//! Complex discs with rigorous radii.

use super::bigfloat::BigFloat;
use super::mag::{Mag, Radius};
use super::real::Real;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::ops::{Add, Mul, Neg, Sub};

/// The closed disc `{ z : |z - (re + i im)| <= rad }`.
#[derive(Clone, Debug)]
pub struct Ball<T: Real> {
    pub re: T,
    pub im: T,
    pub rad: T::Rad,
}

pub fn hypot_up<R: Radius>(a: R, b: R) -> R {
    if a.is_zero() {
        return b;
    }
    if b.is_zero() {
        return a;
    }
    a.mul_up(a).add_up(b.mul_up(b)).sqrt_up()
}

pub fn hypot_down<R: Radius>(a: R, b: R) -> R {
    if a.is_zero() {
        return b;
    }
    if b.is_zero() {
        return a;
    }
    a.mul_down(a).add_down(b.mul_down(b)).sqrt_down()
}

impl<T: Real> Ball<T> {
    pub fn new(re: T, im: T, rad: T::Rad) -> Self {
        Ball { re, im, rad }
    }

    pub fn exact(re: T, im: T) -> Self {
        Ball {
            re,
            im,
            rad: T::Rad::zero(),
        }
    }

    pub fn zero() -> Self {
        Ball::exact(T::zero(), T::zero())
    }

    pub fn one() -> Self {
        Ball::exact(T::one(), T::zero())
    }

    pub fn from_rational(re: &BigRational, im: &BigRational, prec: u32) -> Self {
        let (r, e1) = T::from_rational(re, prec);
        let (i, e2) = T::from_rational(im, prec);
        Ball {
            re: r,
            im: i,
            rad: e1.add_up(e2),
        }
    }

    pub fn from_real_rational(re: &BigRational, prec: u32) -> Self {
        Ball::from_rational(re, &BigRational::zero(), prec)
    }

    pub fn from_i64(v: i64, prec: u32) -> Self {
        let (r, e) = T::from_i64_prec(v, prec);
        let (i, _) = T::from_i64_prec(0, prec);
        Ball { re: r, im: i, rad: e }
    }

    /// Convert a multiprecision ball into this scalar type.
    pub fn from_mp(b: &Ball<BigFloat>, prec: u32) -> Self {
        let (r, e1) = T::from_bigfloat(&b.re, prec);
        let (i, e2) = T::from_bigfloat(&b.im, prec);
        Ball {
            re: r,
            im: i,
            rad: T::Rad::from_mag_up(b.rad).add_up(e1).add_up(e2),
        }
    }

    pub fn to_mp(&self, prec: u32) -> Ball<BigFloat> {
        let (r, e1) = BigFloat::from_rational(&self.re.to_rational(), prec.max(60));
        let (i, e2) = BigFloat::from_rational(&self.im.to_rational(), prec.max(60));
        Ball {
            re: r,
            im: i,
            rad: self.rad.to_mag().add_up(e1).add_up(e2),
        }
    }

    pub fn precision(&self) -> u32 {
        self.re.precision().max(self.im.precision())
    }

    pub fn with_precision(&self, prec: u32) -> Self {
        let (r, e1) = self.re.with_precision(prec);
        let (i, e2) = self.im.with_precision(prec);
        Ball {
            re: r,
            im: i,
            rad: self.rad.add_up(e1).add_up(e2),
        }
    }

    pub fn radius(&self) -> T::Rad {
        self.rad
    }

    pub fn center_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    pub fn is_exact_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero() && self.rad.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.rad.is_finite()
    }

    pub fn inflate(&self, extra: T::Rad) -> Self {
        Ball {
            re: self.re.clone(),
            im: self.im.clone(),
            rad: self.rad.add_up(extra),
        }
    }

    pub fn center(&self) -> Self {
        Ball::exact(self.re.clone(), self.im.clone())
    }

    /// Upper bound on `|c|` for the centre `c`.
    pub fn center_abs_hi(&self) -> T::Rad {
        hypot_up(self.re.abs_hi(), self.im.abs_hi())
    }

    pub fn center_abs_lo(&self) -> T::Rad {
        hypot_down(self.re.abs_lo(), self.im.abs_lo())
    }

    /// Bounds `(lo, hi)` with `lo <= |z| <= hi` for every `z` in the ball.
    pub fn abs_bounds(&self) -> (T::Rad, T::Rad) {
        let c_hi = self.center_abs_hi();
        let c_lo = self.center_abs_lo();
        (c_lo.sub_down(self.rad), c_hi.add_up(self.rad))
    }

    pub fn abs_hi(&self) -> T::Rad {
        self.center_abs_hi().add_up(self.rad)
    }

    pub fn abs_lo(&self) -> T::Rad {
        self.center_abs_lo().sub_down(self.rad)
    }

    pub fn contains_zero(&self) -> bool {
        self.center_abs_lo() <= self.rad
    }

    /// Exact membership test for a rational point.
    pub fn contains_exact(&self, re: &BigRational, im: &BigRational) -> bool {
        let r = match self.rad.to_rational_opt() {
            Some(r) => r,
            None => return true,
        };
        let dx = self.re.to_rational() - re;
        let dy = self.im.to_rational() - im;
        &dx * &dx + &dy * &dy <= &r * &r
    }

    pub fn neg_ref(&self) -> Self {
        Ball {
            re: self.re.neg(),
            im: self.im.neg(),
            rad: self.rad,
        }
    }

    pub fn conj(&self) -> Self {
        Ball {
            re: self.re.clone(),
            im: self.im.neg(),
            rad: self.rad,
        }
    }

    pub fn add_ref(&self, o: &Self) -> Self {
        let (re, e1) = self.re.add(&o.re);
        let (im, e2) = self.im.add(&o.im);
        Ball {
            re,
            im,
            rad: self.rad.add_up(o.rad).add_up(e1).add_up(e2),
        }
    }

    pub fn sub_ref(&self, o: &Self) -> Self {
        let (re, e1) = self.re.sub(&o.re);
        let (im, e2) = self.im.sub(&o.im);
        Ball {
            re,
            im,
            rad: self.rad.add_up(o.rad).add_up(e1).add_up(e2),
        }
    }

    pub fn mul_ref(&self, o: &Self) -> Self {
        let (rr, e1) = self.re.mul(&o.re);
        let (ii, e2) = self.im.mul(&o.im);
        let (ri, e3) = self.re.mul(&o.im);
        let (ir, e4) = self.im.mul(&o.re);
        let (re, e5) = rr.sub(&ii);
        let (im, e6) = ri.add(&ir);
        let round = e1.add_up(e2).add_up(e3).add_up(e4).add_up(e5).add_up(e6);
        let mut rad = round;
        if !self.rad.is_zero() || !o.rad.is_zero() {
            let a = self.center_abs_hi();
            let b = o.center_abs_hi();
            rad = rad
                .add_up(a.mul_up(o.rad))
                .add_up(b.mul_up(self.rad))
                .add_up(self.rad.mul_up(o.rad));
        }
        Ball { re, im, rad }
    }

    pub fn sqr(&self) -> Self {
        self.mul_ref(self)
    }

    /// Multiply by a real scalar ball `x` (imaginary part zero).
    pub fn scale(&self, x: &T, x_rad: T::Rad) -> Self {
        let (re, e1) = self.re.mul(x);
        let (im, e2) = self.im.mul(x);
        let mut rad = e1.add_up(e2).add_up(self.rad.mul_up(x.abs_hi()));
        if !x_rad.is_zero() {
            rad = rad.add_up(x_rad.mul_up(self.abs_hi()));
        }
        Ball { re, im, rad }
    }

    pub fn mul_pow2(&self, k: i64) -> Self {
        let (re, e1) = self.re.mul_pow2(k);
        let (im, e2) = self.im.mul_pow2(k);
        let rad = self.rad.mul_up(T::Rad::pow2(k));
        Ball {
            re,
            im,
            rad: rad.add_up(e1).add_up(e2),
        }
    }

    /// Reciprocal; `None` if the ball may contain zero.
    pub fn inv(&self) -> Option<Self> {
        let c_lo = self.center_abs_lo();
        if c_lo <= self.rad || c_lo.is_zero() {
            return None;
        }
        let (rr, e1) = self.re.mul(&self.re);
        let (ii, e2) = self.im.mul(&self.im);
        let (n, e3) = rr.add(&ii);
        let e_n = e1.add_up(e2).add_up(e3);
        let (qr, e4) = self.re.div(&n);
        let (qi, e5) = self.im.neg().div(&n);
        // |n_true| >= c_lo^2; the computed n may differ from it by e_n.
        let n_lo = c_lo.mul_down(c_lo);
        let n_comp_lo = n.abs_lo();
        let denom = n_lo.mul_down(n_comp_lo);
        let center_err = if e_n.is_zero() {
            T::Rad::zero()
        } else {
            self.center_abs_hi().mul_up(e_n).div_up(denom)
        };
        let prop = if self.rad.is_zero() {
            T::Rad::zero()
        } else {
            self.rad.div_up(c_lo.mul_down(c_lo.sub_down(self.rad)))
        };
        Some(Ball {
            re: qr,
            im: qi,
            rad: center_err.add_up(e4).add_up(e5).add_up(prop),
        })
    }

    pub fn div_ref(&self, o: &Self) -> Option<Self> {
        o.inv().map(|i| self.mul_ref(&i))
    }

    /// Integer power by repeated squaring.
    pub fn powu(&self, k: u32) -> Self {
        let mut result = Ball::one();
        let mut base = self.clone();
        let mut k = k;
        let mut first = true;
        while k > 0 {
            if k & 1 == 1 {
                result = if first {
                    base.clone()
                } else {
                    result.mul_ref(&base)
                };
                first = false;
            }
            k >>= 1;
            if k > 0 {
                base = base.sqr();
            }
        }
        result
    }
}

impl<T: Real> Add for Ball<T> {
    type Output = Ball<T>;
    fn add(self, o: Self) -> Self {
        self.add_ref(&o)
    }
}

impl<T: Real> Sub for Ball<T> {
    type Output = Ball<T>;
    fn sub(self, o: Self) -> Self {
        self.sub_ref(&o)
    }
}

impl<T: Real> Mul for Ball<T> {
    type Output = Ball<T>;
    fn mul(self, o: Self) -> Self {
        self.mul_ref(&o)
    }
}

impl<T: Real> Neg for Ball<T> {
    type Output = Ball<T>;
    fn neg(self) -> Self {
        self.neg_ref()
    }
}

impl<'a, T: Real> Add<&'a Ball<T>> for &'a Ball<T> {
    type Output = Ball<T>;
    fn add(self, o: &Ball<T>) -> Ball<T> {
        self.add_ref(o)
    }
}

impl<'a, T: Real> Sub<&'a Ball<T>> for &'a Ball<T> {
    type Output = Ball<T>;
    fn sub(self, o: &Ball<T>) -> Ball<T> {
        self.sub_ref(o)
    }
}

impl<'a, T: Real> Mul<&'a Ball<T>> for &'a Ball<T> {
    type Output = Ball<T>;
    fn mul(self, o: &Ball<T>) -> Ball<T> {
        self.mul_ref(o)
    }
}

impl<T: Real> Zero for Ball<T> {
    fn zero() -> Self {
        Ball::zero()
    }
    fn is_zero(&self) -> bool {
        self.is_exact_zero()
    }
}

impl<T: Real> One for Ball<T> {
    fn one() -> Self {
        Ball::one()
    }
}

/// Rigorous lower/upper bounds for `|b|` as a pair of extended magnitudes.
pub fn ball_abs<T: Real>(b: &Ball<T>) -> (Mag, Mag) {
    let (lo, hi) = b.abs_bounds();
    (lo.to_mag(), hi.to_mag())
}

/// Exact squared distance between a ball centre and a rational point.
pub fn center_dist2(b: &Ball<impl Real>, re: &BigRational, im: &BigRational) -> BigRational {
    let dx = b.re.to_rational() - re;
    let dy = b.im.to_rational() - im;
    (&dx * &dx + &dy * &dy).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn exact_arithmetic_stays_exact() {
        let a: Ball<f64> = Ball::exact(0.5, 0.25);
        let b: Ball<f64> = Ball::exact(-1.0, 2.0);
        let p = &a * &b;
        assert_eq!(p.rad, 0.0);
        assert!(p.contains_exact(&q(-1, 1), &q(3, 4)));
    }

    #[test]
    fn inverse_contains_truth() {
        let b: Ball<BigFloat> = Ball::from_rational(&q(1, 3), &q(-2, 7), 120);
        let inv = b.inv().unwrap();
        // 1/(1/3 - 2i/7) = (1/3 + 2i/7) / (1/9 + 4/49)
        let n = q(1, 9) + q(4, 49);
        assert!(inv.contains_exact(&(q(1, 3) / &n), &(q(2, 7) / &n)));
        assert!(Radius::log2(inv.rad) < -110.0);
    }

    #[test]
    fn inverse_of_ball_around_zero_fails() {
        let b: Ball<f64> = Ball::new(1e-10, 0.0, 1e-9);
        assert!(b.inv().is_none());
    }

    #[test]
    fn square_of_pixel_ball() {
        let b: Ball<f64> = Ball::new(0.5, 0.0, 1e-3);
        let s = b.sqr();
        let (lo, hi) = ball_abs(&s);
        assert!(lo.to_f64() <= 0.499f64 * 0.499);
        assert!(hi.to_f64() >= 0.501f64 * 0.501);
    }

    #[test]
    fn powu() {
        let b: Ball<BigFloat> = Ball::from_rational(&q(3, 2), &q(1, 2), 64);
        let p = b.powu(5);
        let mut e = Ball::<BigFloat>::one();
        for _ in 0..5 {
            e = e.mul_ref(&b);
        }
        assert!((p.re.to_f64() - e.re.to_f64()).abs() < 1e-12);
    }
}
