//! Long iteration near a parabolic fixed point.
//!
//! For a germ `f(z) = z + a z^{r+1} + ...` and `|z| < 1/m`, the iterate
//! `f^l(z)` with `l = floor(m^r / C)` is evaluated in one pass over a table
//! of iterate coefficients instead of `l` applications of `f`.

use crate::arith::{Ball, BigFloat, Mag, Radius, Real};
use crate::series::{
    conjugate_scale, iterate_coeff_table, rational_to_series, IterCoeffTable, SeriesError,
    TruncatedSeries,
};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use thiserror::Error;

/// Largest table degree ever built.
pub const MAX_TABLE_DEGREE: usize = 480;
/// Series prefix length kept for non-polynomial germs.
const RATIONAL_PREFIX: usize = MAX_TABLE_DEGREE + 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LongIterError {
    #[error("input ball is not certified inside the disc of radius 1/m")]
    BallTooLarge,
    #[error("m^r < C, the iterate would be trivial")]
    IterationTooShort,
    #[error("precision exhausted")]
    PrecisionExhausted,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

type TableCache = Mutex<HashMap<(TypeId, u32), Arc<dyn Any + Send + Sync>>>;

/// A germ `z + sum a_i z^i` at a parabolic fixed point moved to `0`.
pub struct ParabolicGerm {
    r: usize,
    a_exp: u32,
    alpha: u64,
    c_exp: u32,
    r_lower: Option<BigRational>,
    series: TruncatedSeries<BigRational>,
    conj: TruncatedSeries<BigRational>,
    tables: TableCache,
}

impl std::fmt::Debug for ParabolicGerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParabolicGerm")
            .field("r", &self.r)
            .field("A", &format_args!("2^{}", self.a_exp))
            .field("alpha", &self.alpha)
            .field("C", &format_args!("2^{}", self.c_exp))
            .finish()
    }
}

fn abs_log2(q: &BigRational) -> f64 {
    // log2 |q| to within ~1e-12
    let n = q.numer().abs();
    let d = q.denom().clone();
    let (nb, db) = (n.bits() as i64, d.bits() as i64);
    let sh_n = (nb - 60).max(0);
    let sh_d = (db - 60).max(0);
    let nf = (&n >> sh_n as usize).to_f64().unwrap();
    let df = (&d >> sh_d as usize).to_f64().unwrap();
    nf.log2() - df.log2() + (sh_n - sh_d) as f64
}

fn pow2q(e: i64) -> BigRational {
    if e >= 0 {
        BigRational::from_integer(BigInt::one() << e as usize)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << (-e) as usize)
    }
}

/// Smallest `a` with `|f_i| < 2^{a (i-1)}` for every stored coefficient.
pub fn compute_scaling_a(f: &TruncatedSeries<BigRational>) -> u32 {
    let mut a = 0u32;
    loop {
        let ok = (2..=f.degree()).all(|i| {
            let c = f.coeff(i).abs();
            c < pow2q(a as i64 * (i as i64 - 1))
        });
        if ok {
            return a;
        }
        a += 1;
    }
}

/// `A` and a convergence radius for the Taylor series of `num / den`,
/// certified for all coefficients by a geometric tail bound.
pub fn compute_scaling_a_rational(
    num: &[BigRational],
    den: &[BigRational],
) -> Result<(u32, BigRational), SeriesError> {
    let q0 = den.first().cloned().unwrap_or_else(BigRational::zero).abs();
    if q0.is_zero() {
        return Err(SeriesError::ZeroDenominator);
    }
    let qsum = |rho: &BigRational| -> BigRational {
        let mut s = BigRational::zero();
        let mut p = rho.clone();
        for c in den.iter().skip(1) {
            s += c.abs() * &p;
            p *= rho;
        }
        s / &q0
    };
    let mut j = 0i64;
    let rho = 'search: loop {
        for i in (1..16).rev() {
            let rho = BigRational::from_integer(i.into()) * pow2q(-4 - j);
            if qsum(&rho) < BigRational::one() {
                break 'search rho;
            }
        }
        j += 1;
    };
    let window = num.len().max(den.len()) + 1;
    let mut len = window + 8;
    loop {
        let s = rational_to_series(num, den, len)?;
        let mut m = BigRational::zero();
        let mut rp = rho.clone();
        for k in 1..=len {
            let v = s.coeff(k).abs() * &rp;
            if v > m {
                m = v;
            }
            rp *= &rho;
        }
        // |s_k| <= M rho^{-k} for all k; M A < (A rho)^k closes the tail.
        let mut a = compute_scaling_a(&s);
        loop {
            let arho = pow2q(a as i64) * &rho;
            if arho <= BigRational::one() {
                a += 1;
                continue;
            }
            let lhs = abs_log2(&(&m * pow2q(a as i64)).max(BigRational::one()));
            let i0 = (lhs / abs_log2(&arho)).ceil() as usize + 1;
            if i0 <= len {
                let ok = (2..=len).all(|i| s.coeff(i).abs() < pow2q(a as i64 * (i as i64 - 1)));
                if ok {
                    return Ok((a, rho));
                }
                a += 1;
                continue;
            }
            len = i0 + 1;
            break;
        }
    }
}

impl ParabolicGerm {
    /// Germ given by its full (finite) list of coefficients from `z^1`.
    pub fn from_polynomial(coeffs: Vec<BigRational>) -> Result<Self, SeriesError> {
        if coeffs.first().map(|c| !c.is_one()).unwrap_or(true) {
            return Err(SeriesError::NotTangentToIdentity);
        }
        let series = TruncatedSeries::new(coeffs);
        let a = compute_scaling_a(&series);
        Self::build(series, a, None)
    }

    /// Germ given as the Taylor expansion of `num / den` at `0`.
    pub fn from_rational(num: &[BigRational], den: &[BigRational]) -> Result<Self, SeriesError> {
        let poly = den.len() == 1;
        let series = rational_to_series(num, den, if poly { num.len().max(2) } else { RATIONAL_PREFIX })?;
        if poly {
            let a = compute_scaling_a(&series);
            return Self::build(series, a, None);
        }
        let (a, rho) = compute_scaling_a_rational(num, den)?;
        Self::build(series, a, Some(rho))
    }

    fn build(
        series: TruncatedSeries<BigRational>,
        a_exp: u32,
        r_lower: Option<BigRational>,
    ) -> Result<Self, SeriesError> {
        let r = series.degeneracy().ok_or(SeriesError::NotTangentToIdentity)?;
        let alpha = 2 * (r as u64).pow(3);
        // smallest power of two strictly above 2^r alpha A^r
        let bound = BigInt::from(alpha) << (r + r * a_exp as usize);
        let c_exp = bound.bits() as u32;
        let conj = conjugate_scale(&series, a_exp as i64);
        Ok(ParabolicGerm {
            r,
            a_exp,
            alpha,
            c_exp,
            r_lower,
            series,
            conj,
            tables: Mutex::new(HashMap::new()),
        })
    }

    pub fn degeneracy(&self) -> usize {
        self.r
    }
    /// `log2 A`.
    pub fn a_exp(&self) -> u32 {
        self.a_exp
    }
    pub fn alpha(&self) -> u64 {
        self.alpha
    }
    /// `log2 C`.
    pub fn c_exp(&self) -> u32 {
        self.c_exp
    }
    pub fn r_lower(&self) -> Option<&BigRational> {
        self.r_lower.as_ref()
    }
    pub fn series(&self) -> &TruncatedSeries<BigRational> {
        &self.series
    }
    pub fn conjugated(&self) -> &TruncatedSeries<BigRational> {
        &self.conj
    }
    pub fn is_polynomial(&self) -> bool {
        self.r_lower.is_none()
    }

    /// `l = floor(m^r / C)` for `m = 2^m_exp`.
    pub fn ell(&self, m_exp: u32) -> BigUint {
        let e = self.r as i64 * m_exp as i64 - self.c_exp as i64;
        if e < 0 {
            BigUint::zero()
        } else {
            BigUint::one() << e as usize
        }
    }

    /// Table over `Ball<T>` at (at least) the given precision and degree.
    pub fn table<T: Real>(
        &self,
        prec: u32,
        degree: usize,
    ) -> Result<Arc<IterCoeffTable<Ball<T>>>, LongIterError> {
        if degree > MAX_TABLE_DEGREE {
            return Err(LongIterError::PrecisionExhausted);
        }
        let bucket = prec.max(64).div_ceil(64) * 64;
        let key = (TypeId::of::<T>(), bucket);
        if let Some(t) = self.tables.lock().unwrap().get(&key) {
            let t = t.clone().downcast::<IterCoeffTable<Ball<T>>>().unwrap();
            if t.degree() >= degree {
                return Ok(t);
            }
        }
        let deg = degree.max(32).div_ceil(16) * 16;
        let deg = deg.min(MAX_TABLE_DEGREE).min(self.conj_degree_cap());
        let conj = self.conj.truncate(deg);
        let mp = iterate_coeff_table(&conj, deg, bucket + 16)?;
        let tbl: IterCoeffTable<Ball<T>> = mp.convert(|c| Ball::<T>::from_mp(c, bucket));
        let arc = Arc::new(tbl);
        self.tables.lock().unwrap().insert(key, arc.clone());
        if arc.degree() < degree {
            return Err(LongIterError::PrecisionExhausted);
        }
        Ok(arc)
    }

    fn conj_degree_cap(&self) -> usize {
        if self.is_polynomial() {
            MAX_TABLE_DEGREE
        } else {
            self.series.degree()
        }
    }

    /// Upper bound on `|a_k^{(l)} z^{k+1}|` for `|z| <= z_abs_hi`.
    pub fn tail_bound(&self, k: usize, ell: &BigUint, z_abs_hi: Mag) -> Mag {
        match self.log2_rho(ell, z_abs_hi) {
            None => Mag::ZERO,
            Some(lr) => {
                let l = lr * k as f64 + z_abs_hi.log2() + 1e-9 * (k as f64 + 1.0);
                Mag::pow2(l.ceil() as i64)
            }
        }
    }

    /// `log2` of `(alpha l)^{1/r} A |z|`, slightly rounded up.
    fn log2_rho(&self, ell: &BigUint, z_abs_hi: Mag) -> Option<f64> {
        if ell.is_zero() || z_abs_hi.is_zero() {
            return None;
        }
        let lb = ell.bits() as i64;
        let sh = (lb - 60).max(0);
        let ell_log = (ell >> sh as usize).to_f64().unwrap().log2() + sh as f64;
        let v = ((self.alpha as f64).log2() + ell_log) / self.r as f64
            + self.a_exp as f64
            + z_abs_hi.log2();
        Some(v + 1e-9 * (1.0 + v.abs()))
    }
}

/// Sum `sum_{k>=K} rho^k`, `sum_{k>=K} (k+1) rho^k` in `log2` form.
fn tail_logs(lr: f64, k: usize) -> (f64, f64) {
    let rho = lr.exp2();
    let one_minus = 1.0 - rho;
    let v = lr * k as f64 - one_minus.log2();
    let d = lr * k as f64 + ((k as f64 + 1.0) / one_minus + rho / (one_minus * one_minus)).log2();
    (v, d)
}

/// `(f^l(z), (f^l)'(z))` for `l = floor(m^r / C)`, `m = 2^m_exp`.
pub fn long_iterate<T: Real>(
    germ: &ParabolicGerm,
    z: &Ball<T>,
    m_exp: u32,
    s: u32,
) -> Result<(Ball<T>, Ball<T>), LongIterError> {
    if (germ.r as u64) * (m_exp as u64) < germ.c_exp as u64 {
        return Err(LongIterError::IterationTooShort);
    }
    let zhi = z.abs_hi().to_mag();
    if !(zhi < Mag::pow2(-(m_exp as i64))) {
        return Err(LongIterError::BallTooLarge);
    }
    if let Some(rl) = &germ.r_lower {
        if pow2q(-(m_exp as i64)) >= *rl {
            return Err(LongIterError::BallTooLarge);
        }
    }
    iterate_exact(germ, z, &germ.ell(m_exp), s)
}

/// `(f^l(z), (f^l)'(z))` for an arbitrary `l` with `(alpha l)^{1/r} A |z| < 1`.
pub fn iterate_exact<T: Real>(
    germ: &ParabolicGerm,
    z: &Ball<T>,
    ell: &BigUint,
    s: u32,
) -> Result<(Ball<T>, Ball<T>), LongIterError> {
    if ell.is_zero() || z.is_exact_zero() {
        let one = Ball::<T>::from_i64(1, z.precision());
        return Ok((z.clone(), one));
    }
    let zhi = z.abs_hi().to_mag();
    let lr = germ.log2_rho(ell, zhi).ok_or(LongIterError::BallTooLarge)?;
    if lr >= -0.05 {
        return Err(LongIterError::BallTooLarge);
    }
    let target = -(s as f64);
    let cap = (2 * s as usize + 2).min(MAX_TABLE_DEGREE);
    let mut kt = 2usize;
    loop {
        let (v, d) = tail_logs(lr, kt);
        if v + zhi.log2() <= target && d <= target {
            break;
        }
        kt += 1;
        if kt > cap {
            kt = cap;
            break;
        }
    }
    let (tv, td) = tail_logs(lr, kt);
    let tail_v = Mag::pow2((tv + zhi.log2()).ceil() as i64);
    let tail_d = Mag::pow2(td.ceil() as i64);

    let zp = z.precision();
    let mut prec = if T::supports_precision(s + 32) {
        zp.min(s + 32).max(53)
    } else {
        zp.max(53)
    };
    let mut last = None;
    for _ in 0..4 {
        let zz = if T::supports_precision(prec) && prec != z.precision() {
            z.with_precision(prec)
        } else {
            z.clone()
        };
        let (w, dw) = eval_with_table(germ, &zz, ell, kt, prec)?;
        let w = w.inflate(T::Rad::from_mag_up(tail_v));
        let dw = dw.inflate(T::Rad::from_mag_up(tail_d));
        let allowed = Mag::pow2(-(s as i64)).add_up(
            z.rad
                .to_mag()
                .mul_up(dw.abs_hi().to_mag().mul_up(Mag::from_f64(4.0)).add_up(Mag::from_f64(4.0))),
        );
        let ok = w.rad.to_mag() <= allowed.add_up(tail_v);
        last = Some((w, dw));
        if ok || !T::supports_precision(prec * 2) {
            break;
        }
        prec *= 2;
    }
    let (mut w, mut dw) = last.unwrap();
    if !w.is_finite() || !dw.is_finite() {
        return Err(LongIterError::PrecisionExhausted);
    }
    if w.precision() != zp && T::supports_precision(zp) {
        w = w.with_precision(zp);
        dw = dw.with_precision(zp);
    }
    Ok((w, dw))
}

fn eval_with_table<T: Real>(
    germ: &ParabolicGerm,
    z: &Ball<T>,
    ell: &BigUint,
    kt: usize,
    prec: u32,
) -> Result<(Ball<T>, Ball<T>), LongIterError> {
    let table = germ.table::<T>(prec, kt)?;
    let r = germ.r;
    let zeta = z.mul_pow2(germ.a_exp as i64);
    let ell_bf = BigFloat::from_parts(BigInt::from(ell.clone()), 0, 0);
    let lb: Ball<T> = Ball::from_mp(&Ball::exact(ell_bf, BigFloat::zero()), prec);
    let v = lb.mul_ref(&zeta.powu(r as u32));
    let mut zp: Vec<Ball<T>> = Vec::with_capacity(kt + 1);
    zp.push(Ball::from_i64(1, prec));
    for e in 1..=kt {
        let next = zp[e - 1].mul_ref(&zeta);
        zp.push(next);
    }
    let imax = (kt - 1) / r;
    let mut vp: Vec<Ball<T>> = Vec::with_capacity(imax + 1);
    vp.push(Ball::from_i64(1, prec));
    for i in 1..=imax {
        let next = vp[i - 1].mul_ref(&v);
        vp.push(next);
    }
    let mut sum_v = Ball::<T>::zero();
    let mut sum_d = Ball::<T>::zero();
    for j in 2..=kt {
        let p = table.poly(j)?;
        let mut tj = Ball::<T>::zero();
        for (i, alpha) in p.iter().enumerate() {
            if alpha.is_exact_zero() {
                continue;
            }
            let e = j - 1 - r * i;
            tj = tj.add_ref(&alpha.mul_ref(&vp[i]).mul_ref(&zp[e]));
        }
        if tj.is_exact_zero() {
            continue;
        }
        sum_v = sum_v.add_ref(&tj);
        sum_d = sum_d.add_ref(&tj.mul_ref(&Ball::from_i64(j as i64, prec)));
    }
    let one = Ball::<T>::from_i64(1, prec);
    let g_val = zeta.add_ref(&zeta.mul_ref(&sum_v));
    let w = g_val.mul_pow2(-(germ.a_exp as i64));
    let dw = one.add_ref(&sum_d);
    Ok((w, dw))
}

/// `l`-fold naive iteration of the germ, with derivative.
pub fn naive_iterate<T: Real>(
    germ: &ParabolicGerm,
    z: &Ball<T>,
    ell: u64,
) -> (Ball<T>, Ball<T>) {
    let prec = z.precision();
    let coeffs: Vec<Ball<T>> = germ
        .series
        .coeffs()
        .iter()
        .map(|q| Ball::from_real_rational(q, prec))
        .collect();
    let mut w = z.clone();
    let mut d = Ball::<T>::from_i64(1, prec);
    for _ in 0..ell {
        let mut val = Ball::<T>::zero();
        let mut der = Ball::<T>::zero();
        for (i, c) in coeffs.iter().enumerate().rev() {
            val = val.add_ref(c).mul_ref(&w);
            if i > 0 {
                der = der.mul_ref(&w).add_ref(&c.mul_ref(&Ball::from_i64(i as i64 + 1, prec)));
            } else {
                der = der.mul_ref(&w).add_ref(c);
            }
        }
        d = d.mul_ref(&der);
        w = val;
    }
    (w, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn scaling_examples() {
        let f = TruncatedSeries::new(vec![q(1), q(1)]);
        assert_eq!(compute_scaling_a(&f), 1);
        let f = TruncatedSeries::new(vec![q(1), q(4)]);
        assert_eq!(compute_scaling_a(&f), 3);
        let (a, _) = compute_scaling_a_rational(&[q(0), q(1)], &[q(1), q(-1)]).unwrap();
        assert_eq!(a, 1);
    }

    #[test]
    fn constants_for_standard_germs() {
        let g = ParabolicGerm::from_polynomial(vec![q(1), q(1)]).unwrap();
        assert_eq!((g.a_exp(), g.alpha(), g.c_exp()), (1, 2, 4));
        let g = ParabolicGerm::from_polynomial(vec![q(1), q(0), q(0), q(1)]).unwrap();
        assert_eq!((g.degeneracy(), g.a_exp(), g.alpha(), g.c_exp()), (3, 1, 54, 12));
    }

    #[test]
    fn closed_form_geometric_germ() {
        let g = ParabolicGerm::from_rational(&[q(0), q(1)], &[q(1), q(-1)]).unwrap();
        let z: Ball<BigFloat> = Ball::from_real_rational(&BigRational::new(1.into(), 2048.into()), 200);
        let (w, dw) = long_iterate(&g, &z, 10, 53).unwrap();
        let zq = BigRational::new(1.into(), 2048.into());
        let den = q(1) - q(64) * &zq;
        assert!(w.contains_exact(&(&zq / &den), &q(0)));
        assert!(dw.contains_exact(&(q(1) / (&den * &den)), &q(0)));
        assert!(w.rad.log2() < -53.0);
    }

    #[test]
    fn zero_is_fixed() {
        let g = ParabolicGerm::from_polynomial(vec![q(1), q(1)]).unwrap();
        let z: Ball<f64> = Ball::zero();
        let (w, dw) = long_iterate(&g, &z, 10, 53).unwrap();
        assert!(w.is_exact_zero());
        assert!(dw.contains_exact(&q(1), &q(0)));
    }

    #[test]
    fn too_short_and_too_large() {
        let g = ParabolicGerm::from_polynomial(vec![q(1), q(0), q(0), q(1)]).unwrap();
        let z: Ball<f64> = Ball::exact(0.01, 0.0);
        assert_eq!(long_iterate(&g, &z, 3, 53).unwrap_err(), LongIterError::IterationTooShort);
        let z: Ball<f64> = Ball::exact(0.2, 0.0);
        assert_eq!(long_iterate(&g, &z, 4, 53).unwrap_err(), LongIterError::BallTooLarge);
    }
}
