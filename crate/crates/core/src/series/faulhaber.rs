use super::poly::SeriesError;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Bernoulli numbers `B_0..=B_m` with the convention `B_1 = +1/2`.
pub fn bernoulli_plus(m: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = vec![BigRational::one()];
    let binom = binomial_rows(m + 1);
    for k in 1..=m {
        let mut acc = BigRational::zero();
        for (j, bj) in b.iter().enumerate() {
            acc += BigRational::from_integer(binom[k + 1][j].clone()) * bj;
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(k as u64 + 1)));
    }
    if m >= 1 {
        b[1] = -b[1].clone();
    }
    b
}

fn binomial_rows(n: usize) -> Vec<Vec<BigInt>> {
    let mut rows: Vec<Vec<BigInt>> = vec![vec![BigInt::one()]];
    for i in 1..=n {
        let prev = &rows[i - 1];
        let mut row = vec![BigInt::one(); i + 1];
        for j in 1..i {
            row[j] = &prev[j - 1] + &prev[j];
        }
        rows.push(row);
    }
    rows
}

/// Closed forms of `F_d(n) = sum_{i=1}^{n} i^d` for `d <= max_degree`.
#[derive(Clone, Debug)]
pub struct PowerSums {
    max_degree: usize,
    /// `polys[d][k]` is the coefficient of `n^k` in `F_d`.
    polys: Vec<Vec<BigRational>>,
}

impl PowerSums {
    pub fn new(max_degree: usize) -> Self {
        let b = bernoulli_plus(max_degree);
        let binom = binomial_rows(max_degree + 1);
        let mut polys = Vec::with_capacity(max_degree + 1);
        for d in 0..=max_degree {
            let mut p = vec![BigRational::zero(); d + 2];
            let inv = BigRational::new(BigInt::one(), BigInt::from(d as u64 + 1));
            for (k, bk) in b.iter().enumerate().take(d + 1) {
                let c = BigRational::from_integer(binom[d + 1][k].clone()) * bk * &inv;
                p[d + 1 - k] += c;
            }
            polys.push(p);
        }
        PowerSums { max_degree, polys }
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Coefficients of `F_d` in powers of `n`.
    pub fn poly(&self, d: usize) -> Result<&[BigRational], SeriesError> {
        self.polys
            .get(d)
            .map(|v| v.as_slice())
            .ok_or(SeriesError::DegreeOutOfRange {
                requested: d,
                max: self.max_degree,
            })
    }

    /// Coefficients of `G_d(n) = sum_{i=1}^{n-1} i^d = F_d(n) - n^d`.
    pub fn shifted(&self, d: usize) -> Result<Vec<BigRational>, SeriesError> {
        let mut p = self.poly(d)?.to_vec();
        p[d] -= BigRational::one();
        Ok(p)
    }

    /// `F_d(n)` evaluated exactly.
    pub fn power_sum(&self, d: usize, n: &BigInt) -> Result<BigRational, SeriesError> {
        let p = self.poly(d)?;
        let x = BigRational::from_integer(n.clone());
        let mut acc = BigRational::zero();
        for c in p.iter().rev() {
            acc = acc * &x + c;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_squares() {
        let ps = PowerSums::new(5);
        assert_eq!(
            ps.power_sum(2, &BigInt::from(10)).unwrap(),
            BigRational::from_integer(385.into())
        );
    }

    #[test]
    fn bernoulli_values() {
        let b = bernoulli_plus(4);
        assert_eq!(b[1], BigRational::new(1.into(), 2.into()));
        assert_eq!(b[2], BigRational::new(1.into(), 6.into()));
        assert_eq!(b[4], BigRational::new((-1).into(), 30.into()));
    }

    #[test]
    fn brute_force_agreement() {
        let ps = PowerSums::new(12);
        for d in 0..=12usize {
            for n in 0..20u64 {
                let direct: BigInt = (1..=n).map(|i| num_traits::pow(BigInt::from(i), d)).sum();
                assert_eq!(
                    ps.power_sum(d, &BigInt::from(n)).unwrap(),
                    BigRational::from_integer(direct)
                );
            }
        }
    }

    #[test]
    fn beyond_max_is_an_error() {
        let ps = PowerSums::new(3);
        assert!(matches!(
            ps.power_sum(4, &BigInt::from(2)),
            Err(SeriesError::DegreeOutOfRange { .. })
        ));
    }
}
