//! Certified arithmetic: extended magnitudes, multiprecision floats and
//! complex balls.

pub mod ball;
pub mod bigfloat;
pub mod mag;
pub mod real;

pub use ball::{ball_abs, hypot_down, hypot_up, Ball};
pub use bigfloat::BigFloat;
pub use mag::{Mag, Radius};
pub use real::Real;

use num_bigint::BigInt;
use num_rational::BigRational;

/// Parse `"a/b"`, `"-3"` or a finite decimal such as `"0.49"` exactly.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d == BigInt::from(0) {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits = format!("{}{}", int, frac);
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let n: BigInt = digits.parse().ok()?;
    let d = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(n, d);
    Some(if neg { -r } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        let h = BigRational::new(1.into(), 2.into());
        assert_eq!(parse_rational("1/2"), Some(h.clone()));
        assert_eq!(parse_rational("0.5"), Some(h.clone()));
        assert_eq!(parse_rational("-0.5"), Some(-h));
        assert_eq!(parse_rational("3"), Some(BigRational::from_integer(3.into())));
        assert_eq!(parse_rational("x"), None);
    }
}
