use crate::arith::{Ball, BigFloat, Real};
use crate::geometry::map::RationalMap;
use crate::geometry::scene::Scene;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CountError {
    #[error("epsilon must lie in (0, 1/10)")]
    OutOfDomain,
    #[error("escape count not certified: between {lo} and {hi}")]
    Uncertified { lo: u64, hi: u64 },
    #[error("no escape within {0} iterations")]
    Budget(u64),
}

/// Certified escape count `[lo, hi]`; equal ends mean the count is exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EscapeCount {
    pub lo: u64,
    pub hi: u64,
}

impl EscapeCount {
    pub fn exact(&self) -> Option<u64> {
        (self.lo == self.hi).then_some(self.lo)
    }
}

fn down(x: f64) -> f64 {
    x.next_down()
}

fn up(x: f64) -> f64 {
    x.next_up()
}

/// Number of iterations of `z + z^4` taking `epsilon` out of the disk of
/// radius 2.
///
/// The real orbit is increasing, so an outward-rounded interval iteration
/// certifies the count.
pub fn milnor_escape_count(epsilon: &BigRational) -> Result<EscapeCount, CountError> {
    let tenth = BigRational::new(1.into(), 10.into());
    if !epsilon.is_positive() || *epsilon >= tenth {
        return Err(CountError::OutOfDomain);
    }
    let e = epsilon.to_f64().ok_or(CountError::OutOfDomain)?;
    let (mut lo, mut hi) = (down(e), up(e));
    let budget = (4.0 / (e * e * e)) as u64 + 1000;
    let mut k_lo = None;
    let mut k = 0u64;
    while k <= budget {
        if k_lo.is_none() && hi > 2.0 {
            k_lo = Some(k);
        }
        if lo > 2.0 {
            let kl = k_lo.unwrap_or(k);
            let c = EscapeCount { lo: kl, hi: k };
            return Ok(c);
        }
        let l2 = down(lo * lo);
        let l4 = down(l2 * l2);
        let h2 = up(hi * hi);
        let h4 = up(h2 * h2);
        lo = down(lo + l4);
        hi = up(hi + h4);
        k += 1;
    }
    Err(CountError::Budget(budget))
}

/// Naive escape count of an exact starting point under the scene map.
pub fn naive_escape_count(
    scene: &Scene,
    z: &crate::geometry::CQ,
    escape_radius: f64,
    max_iter: u64,
) -> Option<u64> {
    naive_escape_count_map(&scene.map, z, escape_radius, max_iter)
}

/// As [`naive_escape_count`], retrying in multiprecision when the `f64`
/// ball grows too wide to certify the count.
pub fn naive_escape_count_map(
    map: &RationalMap,
    z: &crate::geometry::CQ,
    escape_radius: f64,
    max_iter: u64,
) -> Option<u64> {
    escape_count_at::<f64>(map, z, escape_radius, max_iter, 53)
        .or_else(|| escape_count_at::<BigFloat>(map, z, escape_radius, max_iter, 128))
        .or_else(|| escape_count_at::<BigFloat>(map, z, escape_radius, max_iter, 256))
}

fn escape_count_at<T: Real>(
    map: &RationalMap,
    z: &crate::geometry::CQ,
    escape_radius: f64,
    max_iter: u64,
    prec: u32,
) -> Option<u64> {
    use crate::arith::Radius;
    let ev = map.evaluator::<T>(prec);
    let mut w: Ball<T> = z.to_ball(prec);
    for k in 0..=max_iter {
        let lo = f64::from_mag_down(w.abs_lo().to_mag());
        if lo > escape_radius {
            return Some(k);
        }
        if f64::from_mag_up(w.radius().to_mag()) > escape_radius {
            return None;
        }
        w = ev.eval(&w)?;
        if !w.is_finite() {
            return None;
        }
    }
    None
}

/// `1 / (3 eps^3)`.
pub fn milnor_law(epsilon: f64) -> f64 {
    1.0 / (3.0 * epsilon.powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn rejects_large_epsilon() {
        assert_eq!(
            milnor_escape_count(&BigRational::one()),
            Err(CountError::OutOfDomain)
        );
    }

    #[test]
    fn hundredth() {
        let c = milnor_escape_count(&BigRational::new(1.into(), 100.into())).unwrap();
        let law = milnor_law(0.01);
        assert!(((c.lo as f64) - law).abs() < 0.1 * law, "{c:?}");
        assert_eq!(c.exact(), Some(c.lo));
    }
}
