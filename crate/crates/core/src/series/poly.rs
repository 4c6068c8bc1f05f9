use crate::arith::{Ball, BigFloat, Radius, Real};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

/// Coefficient ring for truncated series: exact rationals or certified balls.
pub trait Coeff:
    Clone
    + Debug
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_rational_prec(q: &BigRational, prec: u32) -> Self;
    fn add_c(&self, o: &Self) -> Self;
    fn mul_c(&self, o: &Self) -> Self;
    fn mul_pow2(&self, k: i64) -> Self;
    /// `log2` of the enclosure radius, `-inf` when exact.
    fn radius_log2(&self) -> f64;
    fn abs_hi_f64(&self) -> f64;
}

impl Coeff for BigRational {
    fn from_rational_prec(q: &BigRational, _prec: u32) -> Self {
        q.clone()
    }
    fn add_c(&self, o: &Self) -> Self {
        self + o
    }
    fn mul_c(&self, o: &Self) -> Self {
        self * o
    }
    fn mul_pow2(&self, k: i64) -> Self {
        if k >= 0 {
            self * BigRational::from_integer(BigInt::one() << k as usize)
        } else {
            self / BigRational::from_integer(BigInt::one() << (-k) as usize)
        }
    }
    fn radius_log2(&self) -> f64 {
        f64::NEG_INFINITY
    }
    fn abs_hi_f64(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
}

impl<T: Real> Coeff for Ball<T> {
    fn from_rational_prec(q: &BigRational, prec: u32) -> Self {
        Ball::from_real_rational(q, prec)
    }
    fn add_c(&self, o: &Self) -> Self {
        self.add_ref(o)
    }
    fn mul_c(&self, o: &Self) -> Self {
        self.mul_ref(o)
    }
    fn mul_pow2(&self, k: i64) -> Self {
        Ball::mul_pow2(self, k)
    }
    fn radius_log2(&self) -> f64 {
        self.rad.log2()
    }
    fn abs_hi_f64(&self) -> f64 {
        self.abs_hi().to_f64()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("germ is not tangent to the identity")]
    NotTangentToIdentity,
    #[error("denominator vanishes at the origin")]
    ZeroDenominator,
    #[error("requested degree {requested} exceeds precomputed maximum {max}")]
    DegreeOutOfRange { requested: usize, max: usize },
    #[error("requested precision could not be reached")]
    PrecisionExhausted,
}

/// A power series `sum_{k=1}^{J} a_k z^k` truncated after degree `J`.
#[derive(Clone, Debug)]
pub struct TruncatedSeries<C> {
    coeffs: Vec<C>,
}

impl<C: Coeff> TruncatedSeries<C> {
    /// Coefficients listed from `z^1` upward.
    pub fn new(coeffs: Vec<C>) -> Self {
        TruncatedSeries { coeffs }
    }

    pub fn identity(degree: usize) -> Self {
        let mut c = vec![C::zero(); degree];
        if degree > 0 {
            c[0] = C::one();
        }
        TruncatedSeries { coeffs: c }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of `z^k`; zero beyond the truncation.
    pub fn coeff(&self, k: usize) -> C {
        if k == 0 || k > self.coeffs.len() {
            C::zero()
        } else {
            self.coeffs[k - 1].clone()
        }
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn truncate(&self, degree: usize) -> Self {
        let mut c: Vec<C> = self.coeffs.iter().take(degree).cloned().collect();
        c.resize(degree, C::zero());
        TruncatedSeries { coeffs: c }
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> TruncatedSeries<D> {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    /// Index of the first nonzero coefficient above `z^1`, minus one.
    pub fn degeneracy(&self) -> Option<usize> {
        (2..=self.degree())
            .find(|&k| !self.coeffs[k - 1].is_zero())
            .map(|k| k - 1)
    }

    pub fn eval(&self, z: &C) -> C {
        let mut acc = C::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.add_c(c).mul_c(z);
        }
        acc
    }
}

/// Product of two series without constant terms, truncated at `degree`.
pub fn mul_chop<C: Coeff>(
    a: &TruncatedSeries<C>,
    b: &TruncatedSeries<C>,
    degree: usize,
) -> TruncatedSeries<C> {
    let nz_a: Vec<usize> = (1..=a.degree().min(degree))
        .filter(|&i| !a.coeffs[i - 1].is_zero())
        .collect();
    let nz_b: Vec<usize> = (1..=b.degree().min(degree))
        .filter(|&i| !b.coeffs[i - 1].is_zero())
        .collect();
    let mut out: Vec<Option<C>> = vec![None; degree];
    for &i in &nz_a {
        for &j in &nz_b {
            let k = i + j;
            if k > degree {
                break;
            }
            let t = a.coeffs[i - 1].mul_c(&b.coeffs[j - 1]);
            out[k - 1] = Some(match out[k - 1].take() {
                None => t,
                Some(s) => s.add_c(&t),
            });
        }
    }
    TruncatedSeries {
        coeffs: out.into_iter().map(|c| c.unwrap_or_else(C::zero)).collect(),
    }
}

/// `f(g(z))` truncated at `degree`.
pub fn compose<C: Coeff>(
    f: &TruncatedSeries<C>,
    g: &TruncatedSeries<C>,
    degree: usize,
) -> TruncatedSeries<C> {
    let g = g.truncate(degree);
    let mut out = vec![C::zero(); degree];
    let mut pw = g.clone();
    for k in 1..=f.degree().min(degree) {
        if k > 1 {
            pw = mul_chop(&pw, &g, degree);
        }
        let fk = &f.coeffs[k - 1];
        if fk.is_zero() {
            continue;
        }
        for (o, p) in out.iter_mut().zip(pw.coeffs.iter()) {
            if !p.is_zero() {
                *o = o.add_c(&fk.mul_c(p));
            }
        }
    }
    TruncatedSeries { coeffs: out }
}

/// The `m`-th compositional iterate of `f`, by repeated doubling.
pub fn pow_doubling<C: Coeff>(f: &TruncatedSeries<C>, m: u64, degree: usize) -> TruncatedSeries<C> {
    let mut result = TruncatedSeries::identity(degree);
    let mut base = f.truncate(degree);
    let mut m = m;
    while m > 0 {
        if m & 1 == 1 {
            result = compose(&base, &result, degree);
        }
        m >>= 1;
        if m > 0 {
            base = compose(&base, &base, degree);
        }
    }
    result
}

/// `A f(z / A)` with `A = 2^c`.
pub fn conjugate_scale<C: Coeff>(f: &TruncatedSeries<C>, c: i64) -> TruncatedSeries<C> {
    TruncatedSeries {
        coeffs: f
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a.mul_pow2(-c * i as i64))
            .collect(),
    }
}

/// Taylor expansion of `num(z) / den(z)` at the origin, checked to be
/// `z + O(z^2)`.
pub fn rational_to_series(
    num: &[BigRational],
    den: &[BigRational],
    degree: usize,
) -> Result<TruncatedSeries<BigRational>, SeriesError> {
    let d0 = den.first().cloned().unwrap_or_else(BigRational::zero);
    if d0.is_zero() {
        return Err(SeriesError::ZeroDenominator);
    }
    let get = |v: &[BigRational], i: usize| v.get(i).cloned().unwrap_or_else(BigRational::zero);
    let mut s: Vec<BigRational> = Vec::with_capacity(degree + 1);
    for k in 0..=degree {
        let mut acc = get(num, k);
        for i in 1..=k.min(den.len().saturating_sub(1)) {
            acc -= get(den, i) * &s[k - i];
        }
        s.push(acc / &d0);
    }
    if !s[0].is_zero() || (degree >= 1 && !s[1].is_one()) {
        return Err(SeriesError::NotTangentToIdentity);
    }
    Ok(TruncatedSeries::new(s.into_iter().skip(1).collect()))
}

/// Multiprecision ball series from an exact one.
pub fn to_ball_series(f: &TruncatedSeries<BigRational>, prec: u32) -> TruncatedSeries<Ball<BigFloat>> {
    f.map(|q| Ball::from_real_rational(q, prec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn iterate_of_z_plus_z2() {
        let f = TruncatedSeries::new(vec![q(1), q(1)]);
        let f5 = pow_doubling(&f, 5, 4);
        assert_eq!(f5.coeff(2), q(5));
        // n^2 - n at n = 5
        assert_eq!(f5.coeff(3), q(20));
    }

    #[test]
    fn geometric_germ_is_all_ones() {
        // z / (1 - z)
        let s = rational_to_series(&[q(0), q(1)], &[q(1), q(-1)], 8).unwrap();
        for k in 1..=8 {
            assert_eq!(s.coeff(k), q(1));
        }
    }

    #[test]
    fn non_tangent_rejected() {
        let e = rational_to_series(&[q(0), q(2)], &[q(1)], 4).unwrap_err();
        assert_eq!(e, SeriesError::NotTangentToIdentity);
    }

    #[test]
    fn scaling_conjugation() {
        let f = TruncatedSeries::new(vec![q(1), q(1), q(1)]);
        let g = conjugate_scale(&f, 1);
        assert_eq!(g.coeff(2), BigRational::new(1.into(), 2.into()));
        assert_eq!(g.coeff(3), BigRational::new(1.into(), 4.into()));
    }
}
