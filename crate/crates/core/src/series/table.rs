use super::faulhaber::PowerSums;
use super::poly::{mul_chop, Coeff, SeriesError, TruncatedSeries};
use crate::arith::{Ball, BigFloat};
use num_bigint::BigInt;
use num_rational::BigRational;

/// Working-precision overhead factor for table construction: the table is
/// built with `s + ceil(KAPPA * K * log2(K)^2)` bits.
pub const KAPPA: f64 = 1.0 / 16.0;

/// Coefficients `a_k^{(n)}` of the iterates `f^n` as polynomials in `n`.
///
/// With `f(z) = z + sum_{j>=r+1} a_j z^j`, the coefficient of `z^k` in the
/// `n`-th iterate is a polynomial `P_k(n)` of degree at most `(k-1)/r`.
#[derive(Clone, Debug)]
pub struct IterCoeffTable<C> {
    degree: usize,
    degeneracy: usize,
    polys: Vec<Vec<C>>,
}

/// Largest possible degree in `n` of the coefficient of `z^k`.
pub fn degree_bound(k: usize, r: usize) -> usize {
    if k <= 1 {
        0
    } else {
        (k - 1) / r
    }
}

impl<C: Coeff> IterCoeffTable<C> {
    /// Highest power of `z` covered.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn degeneracy(&self) -> usize {
        self.degeneracy
    }

    /// Coefficients of `P_k` in powers of `n`.
    pub fn poly(&self, k: usize) -> Result<&[C], SeriesError> {
        if k < 2 || k > self.degree {
            return Err(SeriesError::DegreeOutOfRange {
                requested: k,
                max: self.degree,
            });
        }
        Ok(&self.polys[k])
    }

    pub fn eval_coeff_with(&self, k: usize, n: &C) -> Result<C, SeriesError> {
        let p = self.poly(k)?;
        let mut acc = C::zero();
        for c in p.iter().rev() {
            acc = acc.mul_c(n).add_c(c);
        }
        Ok(acc)
    }

    /// Largest `log2` radius over all stored coefficients.
    pub fn max_radius_log2(&self) -> f64 {
        self.polys
            .iter()
            .flat_map(|p| p.iter())
            .map(|c| c.radius_log2())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn convert<D: Coeff>(&self, f: impl Fn(&C) -> D) -> IterCoeffTable<D> {
        IterCoeffTable {
            degree: self.degree,
            degeneracy: self.degeneracy,
            polys: self
                .polys
                .iter()
                .map(|p| p.iter().map(&f).collect())
                .collect(),
        }
    }
}

/// Build the table for `f` up to `z^degree`, with coefficients of the power
/// sums rounded at `prec` bits.
pub fn build_table<C: Coeff>(
    f: &TruncatedSeries<C>,
    degree: usize,
    prec: u32,
    sums: &PowerSums,
) -> Result<IterCoeffTable<C>, SeriesError> {
    if sums.max_degree() + 1 < degree {
        return Err(SeriesError::DegreeOutOfRange {
            requested: degree,
            max: sums.max_degree() + 1,
        });
    }
    let f = f.truncate(degree);
    let r = f.degeneracy().unwrap_or(degree.max(1));
    let g: Vec<Vec<C>> = (0..degree)
        .map(|d| {
            sums.shifted(d)
                .map(|v| v.iter().map(|q| C::from_rational_prec(q, prec)).collect())
                .unwrap_or_default()
        })
        .collect();

    // powers[t][j] = coefficient of z^j in f(z)^t
    let mut powers: Vec<Option<TruncatedSeries<C>>> = vec![None; degree + 1];
    if degree >= 2 {
        powers[1] = Some(f.clone());
    }
    for t in 2..degree {
        let prev = powers[t - 1].as_ref().unwrap();
        powers[t] = Some(mul_chop(prev, &f, degree));
    }

    let mut polys: Vec<Vec<C>> = vec![Vec::new(); degree + 1];
    for j in 2..=degree {
        let dj = degree_bound(j, r);
        let aj = f.coeff(j);
        let mut b: Vec<C> = vec![C::zero(); dj.max(1)];
        b[0] = aj.clone();
        for t in 2..j {
            let c = powers[t].as_ref().unwrap().coeff(j);
            if c.is_zero() {
                continue;
            }
            for (d, p) in polys[t].iter().enumerate() {
                if d < b.len() && !p.is_zero() {
                    b[d] = b[d].add_c(&c.mul_c(p));
                }
            }
        }
        b.truncate(dj);
        let mut p: Vec<C> = vec![C::zero(); dj + 1];
        p[0] = aj;
        for (d, bd) in b.iter().enumerate() {
            if bd.is_zero() {
                continue;
            }
            for (k, gk) in g[d].iter().enumerate() {
                if k <= dj && !gk.is_zero() {
                    p[k] = p[k].add_c(&bd.mul_c(gk));
                }
            }
        }
        polys[j] = p;
    }
    Ok(IterCoeffTable {
        degree,
        degeneracy: r,
        polys,
    })
}

/// Working precision used for a table of the given degree and target.
pub fn table_precision(degree: usize, s: u32) -> u32 {
    let k = degree.max(2) as f64;
    s + (KAPPA * k * k.log2() * k.log2()).ceil() as u32 + 16
}

/// Multiprecision table with every coefficient certified to radius
/// `<= 2^-s`, doubling the working precision until that holds.
pub fn iterate_coeff_table(
    f: &TruncatedSeries<BigRational>,
    degree: usize,
    s: u32,
) -> Result<IterCoeffTable<Ball<BigFloat>>, SeriesError> {
    let sums = PowerSums::new(degree);
    let mut prec = table_precision(degree, s);
    for _ in 0..6 {
        let fb = f.map(|q| Ball::<BigFloat>::from_real_rational(q, prec));
        let t = build_table(&fb, degree, prec, &sums)?;
        if t.max_radius_log2() <= -(s as f64) {
            return Ok(t);
        }
        prec *= 2;
    }
    Err(SeriesError::PrecisionExhausted)
}

/// Evaluate `P_k(n)` at an exact integer.
pub fn eval_coeff(
    table: &IterCoeffTable<Ball<BigFloat>>,
    k: usize,
    n: &BigInt,
    prec: u32,
) -> Result<Ball<BigFloat>, SeriesError> {
    let nb = Ball::<BigFloat>::from_real_rational(&BigRational::from_integer(n.clone()), prec);
    table.eval_coeff_with(k, &nb)
}

#[cfg(test)]
mod tests {
    use super::super::poly::pow_doubling;
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn z_plus_z2_third_coefficient() {
        let f = TruncatedSeries::new(vec![q(1), q(1)]);
        let sums = PowerSums::new(6);
        let t = build_table(&f, 6, 0, &sums).unwrap();
        assert_eq!(t.poly(2).unwrap(), &[q(0), q(1)]);
        assert_eq!(t.poly(3).unwrap(), &[q(0), q(-1), q(1)]);
    }

    #[test]
    fn exact_table_matches_iteration() {
        let f = TruncatedSeries::new(vec![q(1), q(1), q(-2), q(0), q(3)]);
        let sums = PowerSums::new(9);
        let t = build_table(&f, 9, 0, &sums).unwrap();
        for n in 0..7u64 {
            let it = pow_doubling(&f, n, 9);
            for k in 2..=9 {
                let v = t.eval_coeff_with(k, &q(n as i64)).unwrap();
                assert_eq!(v, it.coeff(k), "k={k} n={n}");
            }
        }
    }

    #[test]
    fn degree_clamp_for_cubic_degeneracy() {
        let f = TruncatedSeries::new(vec![q(1), q(0), q(0), q(1)]);
        let sums = PowerSums::new(12);
        let t = build_table(&f, 12, 0, &sums).unwrap();
        assert_eq!(t.degeneracy(), 3);
        for k in 2..=12 {
            assert!(t.poly(k).unwrap().len() <= degree_bound(k, 3) + 1);
        }
        for n in 0..6u64 {
            let it = pow_doubling(&f, n, 12);
            for k in 2..=12 {
                assert_eq!(t.eval_coeff_with(k, &q(n as i64)).unwrap(), it.coeff(k));
            }
        }
    }
}
