use crate::geometry::edt::squared_distance_transform;
use crate::render::image::Viewport;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompareError {
    #[error("viewports differ")]
    ViewportMismatch,
}

/// Two-sided containment report between drawn sets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandReport {
    pub n: u32,
    /// Dilation radius in world units.
    pub radius: f64,
    pub a_in_b: bool,
    pub b_in_a: bool,
    /// Drawn pixels of `a` farther than `radius` from `b`, and vice versa.
    pub a_outside: usize,
    pub b_outside: usize,
    /// Largest pixel-center distance from a drawn pixel of one set to the
    /// other, in world units.
    pub hausdorff: f64,
}

impl BandReport {
    pub fn holds(&self) -> bool {
        self.a_in_b && self.b_in_a
    }
}

fn directed(a: &[bool], b: &[bool], vp: &Viewport, r_px: f64) -> (usize, f64) {
    let d2 = squared_distance_transform(b, vp.width, vp.height);
    let mut out = 0;
    let mut worst: f64 = 0.0;
    for (i, &m) in a.iter().enumerate() {
        if !m {
            continue;
        }
        let d = if d2[i] == u32::MAX {
            f64::INFINITY
        } else {
            (d2[i] as f64).sqrt()
        };
        worst = worst.max(d);
        if d > r_px + 1e-9 {
            out += 1;
        }
    }
    (out, worst)
}

/// Check `a` inside `b` dilated by `2^-(n-2)` and `b` inside `a` dilated
/// likewise.
pub fn compare_pictures(
    a: &[bool],
    va: &Viewport,
    b: &[bool],
    vb: &Viewport,
    n: u32,
) -> Result<BandReport, CompareError> {
    compare_with_radius(a, va, b, vb, n, (-(n as f64 - 2.0)).exp2())
}

pub fn compare_with_radius(
    a: &[bool],
    va: &Viewport,
    b: &[bool],
    vb: &Viewport,
    n: u32,
    radius: f64,
) -> Result<BandReport, CompareError> {
    if va != vb || a.len() != va.len() || b.len() != vb.len() {
        return Err(CompareError::ViewportMismatch);
    }
    let r_px = radius / va.pitch();
    let (a_out, ha) = directed(a, b, va, r_px);
    let (b_out, hb) = directed(b, a, va, r_px);
    let h = ha.max(hb);
    Ok(BandReport {
        n,
        radius,
        a_in_b: a_out == 0,
        b_in_a: b_out == 0,
        a_outside: a_out,
        b_outside: b_out,
        hausdorff: if h.is_finite() { h * va.pitch() } else { h },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::edt::dilate;

    fn vp() -> Viewport {
        Viewport {
            n: 8,
            ci: 0,
            cj: 0,
            width: 16,
            height: 16,
        }
    }

    fn blob() -> Vec<bool> {
        let mut m = vec![false; 256];
        m[8 * 16 + 8] = true;
        m[8 * 16 + 9] = true;
        m
    }

    #[test]
    fn identical_images() {
        let a = blob();
        let r = compare_pictures(&a, &vp(), &a, &vp(), 8).unwrap();
        assert!(r.holds());
        assert_eq!(r.hausdorff, 0.0);
    }

    #[test]
    fn one_pixel_dilation() {
        let a = blob();
        let b = dilate(&a, 16, 16, 1.0);
        let r = compare_with_radius(&a, &vp(), &b, &vp(), 8, vp().pitch()).unwrap();
        assert!(r.a_in_b && r.b_in_a);
        let r0 = compare_with_radius(&a, &vp(), &b, &vp(), 8, 0.0).unwrap();
        assert!(r0.a_in_b && !r0.b_in_a);
    }

    #[test]
    fn mismatch() {
        let mut v2 = vp();
        v2.n = 9;
        assert_eq!(
            compare_pictures(&blob(), &vp(), &blob(), &v2, 8),
            Err(CompareError::ViewportMismatch)
        );
    }
}
