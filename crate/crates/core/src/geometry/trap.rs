use crate::geometry::region::{Petal, wrap_angle};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use std::f64::consts::PI;
use thiserror::Error;

/// Boundary samples per wedge edge and branch.
pub const BOUNDARY_SAMPLES: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrapError {
    #[error("petal invariance failed at apex {apex} after {tries} attempts")]
    InvarianceCheckFailed { apex: f64, tries: usize },
    #[error("germ has no nonzero term beyond the linear one")]
    DegenerateGerm,
}

/// A petal whose forward invariance has been checked by sampling.
#[derive(Clone, Debug, PartialEq)]
pub struct TrapRegion {
    pub petal: Petal,
    pub samples: usize,
    pub worst_defect: f64,
}

/// Germ `delta -> num(delta) / den(delta)` in f64 for sampling.
#[derive(Clone, Debug)]
pub struct GermF64 {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl GermF64 {
    pub fn new(num: &[BigRational], den: &[BigRational]) -> Self {
        let c = |v: &[BigRational]| v.iter().map(|q| q.to_f64().unwrap_or(0.0)).collect();
        GermF64 {
            num: c(num),
            den: c(den),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let h = |c: &[f64]| {
            c.iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &k| acc * z + k)
        };
        h(&self.num) / h(&self.den)
    }
}

fn zeta_of(p: &Petal, d: Complex64) -> Complex64 {
    let (x, y) = p.zeta(d.re, d.im);
    Complex64::new(x, y)
}

/// All `r` preimages of `zeta` under `delta -> -1/(r a delta^r)`.
fn delta_branches(p: &Petal, zeta: Complex64) -> Vec<Complex64> {
    let r = p.r as f64;
    let l = -(p.log2_ra + zeta.norm().log2()) / r;
    let base = (PI - p.arg_a - zeta.arg()) / r;
    (0..p.r)
        .map(|k| Complex64::from_polar(l.exp2(), wrap_angle(base + 2.0 * PI * k as f64 / r)))
        .collect()
}

fn in_wedge(p: &Petal, z: Complex64) -> bool {
    let t = p.eps.tan();
    z.im.abs() <= t * (p.apex - z.re)
}

/// Sample the petal boundary and interior and check `f(P) inside P`.
fn check(p: &Petal, germ: &GermF64) -> Option<(usize, f64)> {
    let mut count = 0;
    let mut worst: f64 = 0.0;
    let dirs = [PI - p.eps, PI + p.eps];
    for &d in &dirs {
        for i in 0..BOUNDARY_SAMPLES {
            // geometric spacing along the edge, from the apex outwards
            let s = (i as f64 / BOUNDARY_SAMPLES as f64 * 24.0).exp2() - 1.0;
            let z = Complex64::new(p.apex, 0.0) + Complex64::from_polar(s, d);
            for delta in delta_branches(p, z) {
                let img = germ.eval(delta);
                let zi = zeta_of(p, img);
                count += 1;
                if !zi.re.is_finite() || in_wedge(p, zi) {
                    return None;
                }
                worst = worst.max((zi - z - 1.0).norm());
            }
        }
    }
    // interior defect on a polar grid of zeta outside the wedge
    for i in 0..64 {
        let rad = p.apex * p.eps.sin() * (i as f64 / 4.0).exp2();
        for j in 0..64 {
            let th = 2.0 * PI * j as f64 / 64.0;
            let z = Complex64::new(p.apex, 0.0) + Complex64::from_polar(rad, th);
            if in_wedge(p, z) {
                continue;
            }
            for delta in delta_branches(p, z) {
                let zi = zeta_of(p, germ.eval(delta));
                count += 1;
                let eta = (zi - z - 1.0).norm();
                if !(eta < 0.5) {
                    return None;
                }
                worst = worst.max(eta);
            }
        }
    }
    Some((count, worst))
}

/// Build the petal about a parabolic point with germ `num / den`, raising
/// the apex until sampling confirms forward invariance.
pub fn build_trap_region(
    r: u32,
    a: (f64, f64),
    germ: &GermF64,
    angle_fraction: f64,
    apex: f64,
) -> Result<TrapRegion, TrapError> {
    if a.0 == 0.0 && a.1 == 0.0 {
        return Err(TrapError::DegenerateGerm);
    }
    let mut apex = apex;
    let tries = 24;
    for _ in 0..tries {
        let p = Petal::new(r, a, apex, angle_fraction);
        if let Some((samples, worst_defect)) = check(&p, germ) {
            return Ok(TrapRegion {
                petal: p,
                samples,
                worst_defect,
            });
        }
        apex *= 1.25;
    }
    Err(TrapError::InvarianceCheckFailed { apex, tries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn quadratic_germ_single_petal() {
        let g = GermF64::new(&[q(0), q(1), q(1)], &[q(1)]);
        let t = build_trap_region(1, (1.0, 0.0), &g, 63.0 / 64.0, 48.0).unwrap();
        let dirs = t.petal.attracting_directions();
        assert_eq!(dirs.len(), 1);
        assert!((dirs[0].abs() - PI).abs() < 1e-12);
        assert!(t.samples >= 2 * BOUNDARY_SAMPLES);
    }

    #[test]
    fn quartic_germ_three_petals() {
        let g = GermF64::new(&[q(0), q(1), q(0), q(0), q(1)], &[q(1)]);
        let t = build_trap_region(3, (1.0, 0.0), &g, 63.0 / 64.0, 64.0).unwrap();
        let dirs = t.petal.attracting_directions();
        assert_eq!(dirs.len(), 3);
        for i in 0..3 {
            let gap = wrap_angle(dirs[(i + 1) % 3] - dirs[i]).abs();
            assert!((gap - 2.0 * PI / 3.0).abs() < 1e-9);
        }
    }
}
