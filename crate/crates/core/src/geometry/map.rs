use crate::arith::{Ball, Real};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::ops::{Add, Mul, Neg, Sub};

/// Exact complex rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CQ {
    pub re: BigRational,
    pub im: BigRational,
}

impl CQ {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        CQ { re, im }
    }
    pub fn real(re: BigRational) -> Self {
        CQ {
            re,
            im: BigRational::zero(),
        }
    }
    pub fn zero() -> Self {
        CQ::real(BigRational::zero())
    }
    pub fn one() -> Self {
        CQ::real(BigRational::one())
    }
    pub fn from_i64(v: i64) -> Self {
        CQ::real(BigRational::from_integer(BigInt::from(v)))
    }
    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    pub fn norm2(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }
    pub fn inv(&self) -> Option<CQ> {
        let n = self.norm2();
        if n.is_zero() {
            return None;
        }
        Some(CQ::new(&self.re / &n, -&self.im / &n))
    }
    pub fn to_f64(&self) -> (f64, f64) {
        use num_traits::ToPrimitive;
        (self.re.to_f64().unwrap(), self.im.to_f64().unwrap())
    }
    pub fn to_ball<T: Real>(&self, prec: u32) -> Ball<T> {
        Ball::from_rational(&self.re, &self.im, prec)
    }
    pub fn approx_abs(&self) -> f64 {
        let (x, y) = self.to_f64();
        x.hypot(y)
    }
}

impl Add for &CQ {
    type Output = CQ;
    fn add(self, o: &CQ) -> CQ {
        CQ::new(&self.re + &o.re, &self.im + &o.im)
    }
}
impl Sub for &CQ {
    type Output = CQ;
    fn sub(self, o: &CQ) -> CQ {
        CQ::new(&self.re - &o.re, &self.im - &o.im)
    }
}
impl Mul for &CQ {
    type Output = CQ;
    fn mul(self, o: &CQ) -> CQ {
        CQ::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}
impl Neg for &CQ {
    type Output = CQ;
    fn neg(self) -> CQ {
        CQ::new(-&self.re, -&self.im)
    }
}

fn trim(mut p: Vec<BigRational>) -> Vec<BigRational> {
    while p.len() > 1 && p.last().map(|c| c.is_zero()).unwrap_or(false) {
        p.pop();
    }
    if p.is_empty() {
        p.push(BigRational::zero());
    }
    p
}

pub fn poly_add(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    let z = BigRational::zero();
    trim(
        (0..n)
            .map(|i| a.get(i).unwrap_or(&z) + b.get(i).unwrap_or(&z))
            .collect(),
    )
}

pub fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

pub fn poly_scale(a: &[BigRational], c: &BigRational) -> Vec<BigRational> {
    trim(a.iter().map(|x| x * c).collect())
}

pub fn poly_deriv(a: &[BigRational]) -> Vec<BigRational> {
    if a.len() <= 1 {
        return vec![BigRational::zero()];
    }
    trim(
        a.iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i as u64)))
            .collect(),
    )
}

/// `p(c + w)` as a polynomial in `w`, for real `c`.
pub fn poly_shift(a: &[BigRational], c: &BigRational) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero()];
    let lin = vec![c.clone(), BigRational::one()];
    for coef in a.iter().rev() {
        out = poly_add(&poly_mul(&out, &lin), &[coef.clone()]);
    }
    out
}

pub fn poly_eval_cq(a: &[BigRational], z: &CQ) -> CQ {
    let mut acc = CQ::zero();
    for c in a.iter().rev() {
        acc = &(&acc * z) + &CQ::real(c.clone());
    }
    acc
}

/// A rational map `N(z) / D(z)` with real rational coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMap {
    num: Vec<BigRational>,
    den: Vec<BigRational>,
}

impl RationalMap {
    pub fn new(num: Vec<BigRational>, den: Vec<BigRational>) -> Option<Self> {
        let den = trim(den);
        if den.iter().all(|c| c.is_zero()) {
            return None;
        }
        Some(RationalMap {
            num: trim(num),
            den,
        })
    }

    pub fn polynomial(num: Vec<BigRational>) -> Self {
        RationalMap {
            num: trim(num),
            den: vec![BigRational::one()],
        }
    }

    pub fn num(&self) -> &[BigRational] {
        &self.num
    }
    pub fn den(&self) -> &[BigRational] {
        &self.den
    }
    pub fn is_polynomial(&self) -> bool {
        self.den.len() == 1
    }
    pub fn degree(&self) -> usize {
        (self.num.len().max(self.den.len())) - 1
    }

    /// `self(other(z))`.
    pub fn compose(&self, other: &RationalMap) -> RationalMap {
        let d = self.degree();
        let (p, q) = (&other.num, &other.den);
        let pow = |v: &[BigRational], k: usize| {
            let mut acc = vec![BigRational::one()];
            for _ in 0..k {
                acc = poly_mul(&acc, v);
            }
            acc
        };
        let build = |coeffs: &[BigRational]| {
            let mut acc = vec![BigRational::zero()];
            for (i, c) in coeffs.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let term = poly_mul(&pow(p, i), &pow(q, d - i));
                acc = poly_add(&acc, &poly_scale(&term, c));
            }
            acc
        };
        let num = build(&self.num);
        let den = build(&self.den);
        let lead = den.iter().rev().find(|c| !c.is_zero()).cloned();
        let mut m = RationalMap::new(num, den).expect("nonzero denominator");
        if m.den.len() == 1 {
            if let Some(l) = lead {
                let inv = BigRational::one() / l;
                m.num = poly_scale(&m.num, &inv);
                m.den = vec![BigRational::one()];
            }
        }
        m
    }

    pub fn iterate(&self, v: usize) -> RationalMap {
        let mut m = self.clone();
        for _ in 1..v {
            m = self.compose(&m);
        }
        m
    }

    pub fn eval_exact(&self, z: &CQ) -> Option<CQ> {
        let n = poly_eval_cq(&self.num, z);
        let d = poly_eval_cq(&self.den, z);
        Some(&n * &d.inv()?)
    }

    pub fn deriv_exact(&self, z: &CQ) -> Option<CQ> {
        let n = poly_eval_cq(&self.num, z);
        let d = poly_eval_cq(&self.den, z);
        let n1 = poly_eval_cq(&poly_deriv(&self.num), z);
        let d1 = poly_eval_cq(&poly_deriv(&self.den), z);
        let top = &(&n1 * &d) - &(&n * &d1);
        let dd = &d * &d;
        Some(&top * &dd.inv()?)
    }

    /// Numerator and denominator of `self(c + w) - c` in powers of `w`.
    pub fn germ_at(&self, c: &BigRational) -> (Vec<BigRational>, Vec<BigRational>) {
        let n = poly_shift(&self.num, c);
        let d = poly_shift(&self.den, c);
        let num = poly_add(&n, &poly_scale(&d, &-c));
        let d0 = d[0].clone();
        if d0.is_zero() || d0.is_one() {
            return (num, d);
        }
        let inv = BigRational::one() / d0;
        (poly_scale(&num, &inv), poly_scale(&d, &inv))
    }

    pub fn evaluator<T: Real>(&self, prec: u32) -> MapEval<T> {
        let conv = |v: &[BigRational]| -> Vec<Ball<T>> {
            v.iter().map(|q| Ball::from_real_rational(q, prec)).collect()
        };
        MapEval {
            num: conv(&self.num),
            den: if self.is_polynomial() && self.den[0].is_one() {
                None
            } else {
                Some(conv(&self.den))
            },
            dnum: conv(&poly_deriv(&self.num)),
            dden: conv(&poly_deriv(&self.den)),
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        use num_traits::ToPrimitive;
        self.num
            .iter()
            .chain(self.den.iter())
            .map(|c| c.abs().to_f64().unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }
}

/// A rational map with coefficients converted to balls of one scalar type.
#[derive(Clone, Debug)]
pub struct MapEval<T: Real> {
    num: Vec<Ball<T>>,
    den: Option<Vec<Ball<T>>>,
    dnum: Vec<Ball<T>>,
    dden: Vec<Ball<T>>,
}

fn horner<T: Real>(c: &[Ball<T>], z: &Ball<T>) -> Ball<T> {
    let mut it = c.iter().rev();
    let mut acc = match it.next() {
        Some(v) => v.clone(),
        None => return Ball::zero(),
    };
    for k in it {
        acc = acc.mul_ref(z);
        if !k.is_exact_zero() {
            acc = acc.add_ref(k);
        }
    }
    acc
}

impl<T: Real> MapEval<T> {
    pub fn eval(&self, z: &Ball<T>) -> Option<Ball<T>> {
        let n = horner(&self.num, z);
        match &self.den {
            None => Some(n),
            Some(d) => n.div_ref(&horner(d, z)),
        }
    }

    pub fn deriv(&self, z: &Ball<T>) -> Option<Ball<T>> {
        let n1 = horner(&self.dnum, z);
        match &self.den {
            None => Some(n1),
            Some(d) => {
                let n = horner(&self.num, z);
                let dv = horner(d, z);
                let d1 = horner(&self.dden, z);
                let top = n1.mul_ref(&dv).sub_ref(&n.mul_ref(&d1));
                top.div_ref(&dv.sqr())
            }
        }
    }

    /// Value and derivative in one call.
    pub fn eval_with_deriv(&self, z: &Ball<T>) -> Option<(Ball<T>, Ball<T>)> {
        Some((self.eval(z)?, self.deriv(z)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn cauliflower() -> RationalMap {
        RationalMap::polynomial(vec![q(1, 4), q(0, 1), q(1, 1)])
    }

    #[test]
    fn parabolic_point_exact() {
        let m = cauliflower();
        let p = CQ::real(q(1, 2));
        assert_eq!(m.eval_exact(&p).unwrap(), p);
        assert_eq!(m.deriv_exact(&p).unwrap(), CQ::one());
    }

    #[test]
    fn germ_of_cauliflower() {
        let (n, d) = cauliflower().germ_at(&q(1, 2));
        assert_eq!(n, vec![q(0, 1), q(1, 1), q(1, 1)]);
        assert_eq!(d, vec![q(1, 1)]);
    }

    #[test]
    fn composition() {
        let m = cauliflower();
        let m2 = m.iterate(2);
        let z = CQ::new(q(1, 3), q(-2, 5));
        let direct = m.eval_exact(&m.eval_exact(&z).unwrap()).unwrap();
        assert_eq!(m2.eval_exact(&z).unwrap(), direct);
    }

    #[test]
    fn ball_evaluation_contains_exact() {
        let m = RationalMap::new(vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(-1, 1)]).unwrap();
        let z = CQ::new(q(1, 3), q(1, 7));
        let e = m.evaluator::<f64>(53);
        let b = z.to_ball::<f64>(53);
        let v = e.eval(&b).unwrap();
        let exact = m.eval_exact(&z).unwrap();
        assert!(v.contains_exact(&exact.re, &exact.im));
        let d = e.deriv(&b).unwrap();
        let exact = m.deriv_exact(&z).unwrap();
        assert!(d.contains_exact(&exact.re, &exact.im));
    }
}
