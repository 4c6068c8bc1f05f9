use crate::geometry::edt::squared_distance_transform;
use crate::geometry::region::LocalBall;
use crate::geometry::scene::Scene;
use crate::oracle::classify::certified_picture;
use crate::render::image::Viewport;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoarseError {
    #[error("coarse estimate not valid at this point")]
    EstimatorOutOfDomain,
    #[error("oracle budget exceeded")]
    OracleBudgetExceeded,
    #[error("corrupt cached picture")]
    Corrupt,
}

/// Fixed-resolution picture of the Julia set over `[-B', B']^2` with a
/// distance table to the nearest drawn cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarsePicture {
    pub c_pix: u32,
    pub viewport: Viewport,
    pub marked: Vec<bool>,
    dist2: Vec<u32>,
    /// Bound on the distance from a drawn cell center to the Julia set.
    pub band: f64,
    /// Largest `|center|` over drawn cells.
    pub r_max: f64,
    pub budget: u64,
    drawn: usize,
}

impl CoarsePicture {
    pub fn from_marked(c_pix: u32, viewport: Viewport, marked: Vec<bool>, budget: u64) -> Self {
        let dist2 = squared_distance_transform(&marked, viewport.width, viewport.height);
        let mut r_max: f64 = 0.0;
        let mut drawn = 0;
        for (i, m) in marked.iter().enumerate() {
            if *m {
                drawn += 1;
                let (x, y) = viewport.center_f64(i % viewport.width, i / viewport.width);
                r_max = r_max.max(x.hypot(y));
            }
        }
        CoarsePicture {
            c_pix,
            viewport,
            marked,
            dist2,
            band: (-(c_pix as f64 - 2.0)).exp2(),
            r_max,
            budget,
            drawn,
        }
    }

    pub fn cell(&self) -> f64 {
        self.viewport.pitch()
    }

    pub fn is_empty(&self) -> bool {
        self.drawn == 0
    }

    pub fn count(&self) -> usize {
        self.drawn
    }

    fn nearest_cell(&self, x: f64, y: f64) -> (usize, usize) {
        let vp = &self.viewport;
        let s = (vp.n as f64).exp2();
        let i = (x * s).round() as i64;
        let j = (y * s).round() as i64;
        let col = (i - vp.ci + (vp.width / 2) as i64).clamp(0, vp.width as i64 - 1);
        let row = (vp.cj + (vp.height / 2) as i64 - 1 - j).clamp(0, vp.height as i64 - 1);
        (col as usize, row as usize)
    }

    /// Certified `[lo, hi]` for the distance from the ball to the set.
    pub fn distance_bounds(&self, w: &LocalBall) -> (f64, f64) {
        if self.is_empty() || !w.is_valid() {
            return (0.0, f64::INFINITY);
        }
        let h = self.cell();
        let (col, row) = self.nearest_cell(w.x, w.y);
        let (cx, cy) = self.viewport.center_f64(col, row);
        let off = (w.x - cx).hypot(w.y - cy);
        let d = (self.dist2[row * self.viewport.width + col] as f64).sqrt() * h;
        let half_diag = h * std::f64::consts::FRAC_1_SQRT_2;
        let slack = 1.0 + 1e-12;
        let lo_a = (d - off) / slack - half_diag - w.rad;
        let hi_a = (off + d + self.band + w.rad) * slack;
        let a = w.abs();
        let lo_b = (a - self.r_max - half_diag) / slack - w.rad;
        let hi_b = (a + self.r_max + self.band + w.rad) * slack;
        (lo_a.max(lo_b).max(0.0), hi_a.min(hi_b))
    }

    /// Estimate `e` with `e <= d(w, J) <= 2e`.
    pub fn coarse_distance(&self, w: &LocalBall) -> Result<f64, CoarseError> {
        let (lo, hi) = self.distance_bounds(w);
        if lo > 0.0 && hi <= 2.0 * lo {
            Ok(lo)
        } else {
            Err(CoarseError::EstimatorOutOfDomain)
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + self.marked.len() / 8);
        out.extend_from_slice(b"PJCP1\n");
        out.extend_from_slice(&self.c_pix.to_le_bytes());
        out.extend_from_slice(&(self.viewport.width as u64).to_le_bytes());
        out.extend_from_slice(&(self.viewport.height as u64).to_le_bytes());
        out.extend_from_slice(&self.viewport.n.to_le_bytes());
        out.extend_from_slice(&self.budget.to_le_bytes());
        let mut byte = 0u8;
        for (i, m) in self.marked.iter().enumerate() {
            if *m {
                byte |= 1 << (i % 8);
            }
            if i % 8 == 7 {
                out.push(byte);
                byte = 0;
            }
        }
        if self.marked.len() % 8 != 0 {
            out.push(byte);
        }
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, CoarseError> {
        let hdr = 6 + 4 + 8 + 8 + 4 + 8;
        if b.len() < hdr || &b[..6] != b"PJCP1\n" {
            return Err(CoarseError::Corrupt);
        }
        let u32_at = |o: usize| u32::from_le_bytes(b[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(b[o..o + 8].try_into().unwrap());
        let c_pix = u32_at(6);
        let width = u64_at(10) as usize;
        let height = u64_at(18) as usize;
        let n = u32_at(26);
        let budget = u64_at(30);
        let len = width * height;
        if b.len() != hdr + len.div_ceil(8) || n != c_pix {
            return Err(CoarseError::Corrupt);
        }
        let marked = (0..len)
            .map(|i| b[hdr + i / 8] & (1 << (i % 8)) != 0)
            .collect();
        let vp = Viewport {
            n,
            ci: 0,
            cj: 0,
            width,
            height,
        };
        Ok(CoarsePicture::from_marked(c_pix, vp, marked, budget))
    }
}

/// Oracle picture of the scene at level `c_pix` over `[-2^k, 2^k]^2` with
/// `2^k >= B`.
pub fn build_coarse_picture(scene: &Scene, c_pix: u32) -> Result<CoarsePicture, CoarseError> {
    let half_exp = scene.bound.log2().ceil().max(0.0) as i32;
    let vp = Viewport::square(c_pix, half_exp);
    let budget = 1u64 << (c_pix + 6);
    let marked = certified_picture(scene, &vp, budget);
    Ok(CoarsePicture::from_marked(c_pix, vp, marked, budget))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> CoarsePicture {
        let vp = Viewport::square(2, 1);
        let mut m = vec![false; vp.len()];
        let (c, r) = vp.locate(0.0, 0.0).unwrap();
        m[r * vp.width + c] = true;
        CoarsePicture::from_marked(2, vp, m, 0)
    }

    #[test]
    fn bytes_round_trip() {
        let p = tiny();
        assert_eq!(CoarsePicture::from_bytes(&p.to_bytes()).unwrap(), p);
        assert_eq!(
            CoarsePicture::from_bytes(&p.to_bytes()[..10]),
            Err(CoarseError::Corrupt)
        );
    }

    #[test]
    fn far_point_estimate() {
        let p = tiny();
        let e = p.coarse_distance(&LocalBall::new(10.0, 0.0, 0.0)).unwrap();
        assert!(e <= 10.0 && 10.0 <= 2.0 * e);
    }

    #[test]
    fn near_point_out_of_domain() {
        let p = tiny();
        assert_eq!(
            p.coarse_distance(&LocalBall::new(0.1, 0.0, 0.0)),
            Err(CoarseError::EstimatorOutOfDomain)
        );
    }
}
