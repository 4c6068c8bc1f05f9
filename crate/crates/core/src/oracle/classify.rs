use crate::arith::{Ball, Radius, Real};
use crate::geometry::map::MapEval;
use crate::geometry::region::{Membership, Region, RegionCtx};
use crate::geometry::scene::Scene;
use crate::render::image::Viewport;

/// Outcome of following one orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerdictKind {
    /// Left the escape disk after `k` steps.
    Escaped(u64),
    /// Entered trap `target` after `k` steps.
    Converged(u64, usize),
    Undecided,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrbitVerdict {
    pub kind: VerdictKind,
    pub iterations: u64,
    pub precision: u32,
}

impl OrbitVerdict {
    pub fn is_conclusive(&self) -> bool {
        self.kind != VerdictKind::Undecided
    }

    pub fn escaped(&self) -> bool {
        matches!(self.kind, VerdictKind::Escaped(_))
    }

    pub fn converged(&self) -> bool {
        matches!(self.kind, VerdictKind::Converged(..))
    }
}

/// Plain orbit follower: map evaluator plus trap regions.
pub struct Oracle<T: Real> {
    map: MapEval<T>,
    sites: Vec<Ball<T>>,
    traps: Vec<Region>,
    escape_radius: f64,
    prec: u32,
}

impl<T: Real> Oracle<T> {
    pub fn new(scene: &Scene, prec: u32) -> Self {
        let mut traps = Vec::new();
        if let Region::And(parts) = &scene.u_tilde {
            if let Some(Region::Not(inner)) = parts.get(1) {
                if let Region::Or(ts) = inner.as_ref() {
                    traps = ts.clone();
                }
            }
        }
        Oracle {
            map: scene.map.evaluator(prec),
            sites: scene.site_balls(prec),
            traps,
            escape_radius: scene.escape_radius,
            prec,
        }
    }

    pub fn with_escape_radius(mut self, r: f64) -> Self {
        self.escape_radius = r;
        self
    }

    fn trapped(&self, w: &Ball<T>) -> Option<usize> {
        let ctx = RegionCtx {
            sites: &self.sites,
            map: &self.map,
        };
        self.traps
            .iter()
            .position(|t| ctx.membership(w, t) == Membership::Inside)
    }

    pub fn classify(&self, z: &Ball<T>, max_iter: u64) -> OrbitVerdict {
        let mut w = z.clone();
        let verdict = |kind, k| OrbitVerdict {
            kind,
            iterations: k,
            precision: self.prec,
        };
        for k in 0..=max_iter {
            if !w.is_finite() {
                return verdict(VerdictKind::Undecided, k);
            }
            let lo = f64::from_mag_down(w.abs_lo().to_mag());
            if lo > self.escape_radius {
                return verdict(VerdictKind::Escaped(k), k);
            }
            let rad = f64::from_mag_up(w.radius().to_mag());
            if rad > self.escape_radius {
                return verdict(VerdictKind::Undecided, k);
            }
            if let Some(t) = self.trapped(&w) {
                return verdict(VerdictKind::Converged(k, t), k);
            }
            if k == max_iter {
                break;
            }
            w = match self.map.eval(&w) {
                Some(v) => v,
                None => return verdict(VerdictKind::Undecided, k),
            };
        }
        verdict(VerdictKind::Undecided, max_iter)
    }
}

/// Classify the orbit of `z` by plain iteration.
pub fn naive_classify<T: Real>(
    z: &Ball<T>,
    scene: &Scene,
    max_iter: u64,
    escape_radius: f64,
) -> OrbitVerdict {
    Oracle::<T>::new(scene, z.precision().max(53))
        .with_escape_radius(escape_radius)
        .classify(z, max_iter)
}

/// Ball containing the pixel block `[col0, col0+size) x [row0, row0+size)`.
fn block_ball(vp: &Viewport, col0: usize, row0: usize, size: usize, scale: f64) -> Ball<f64> {
    let (x0, y0) = vp.center_f64(col0, row0);
    let h = vp.pitch();
    let off = (size as f64 - 1.0) * 0.5 * h;
    let cx = x0 + off;
    let cy = y0 - off;
    let rad = size as f64 * h * scale * std::f64::consts::FRAC_1_SQRT_2 * (1.0 + 1e-12);
    Ball::new(cx, cy, rad)
}

const SUBCELL_DEPTH: u32 = 3;

/// Whether the square of half-side `half` around `(x, y)` is covered by
/// classified balls, splitting up to `depth` times.
fn square_certified(oracle: &Oracle<f64>, x: f64, y: f64, half: f64, budget: u64, depth: u32) -> bool {
    let rad = half * std::f64::consts::SQRT_2 * (1.0 + 1e-12);
    if oracle.classify(&Ball::new(x, y, rad), budget).is_conclusive() {
        return true;
    }
    if depth == 0 {
        return false;
    }
    let h = 0.5 * half;
    [(-h, -h), (h, -h), (-h, h), (h, h)]
        .iter()
        .all(|(dx, dy)| square_certified(oracle, x + dx, y + dy, h, budget, depth - 1))
}

/// Pixels whose cell could not be certified as escaping or trapped.
///
/// Cells are certified by quadtree subdivision: a block is settled at once
/// when the ball around it is classified; otherwise it is split.
pub fn certified_picture(scene: &Scene, vp: &Viewport, budget: u64) -> Vec<bool> {
    certified_picture_scaled(scene, vp, budget, 1.0)
}

/// As [`certified_picture`], with cells enlarged by `scale`.
pub fn certified_picture_scaled(scene: &Scene, vp: &Viewport, budget: u64, scale: f64) -> Vec<bool> {
    let oracle = Oracle::<f64>::new(scene, 53);
    let mut kept = vec![false; vp.len()];
    let top = 64usize.min(vp.width.max(vp.height).next_power_of_two());
    let mut stack = Vec::new();
    let mut r = 0;
    while r < vp.height {
        let mut c = 0;
        while c < vp.width {
            stack.push((c, r, top));
            c += top;
        }
        r += top;
    }
    while let Some((c, r, s)) = stack.pop() {
        if c >= vp.width || r >= vp.height {
            continue;
        }
        let b = block_ball(vp, c, r, s, scale);
        let v = oracle.classify(&b, budget);
        if v.is_conclusive() {
            continue;
        }
        if s == 1 {
            let (x, y) = vp.center_f64(c, r);
            if !square_certified(&oracle, x, y, 0.5 * vp.pitch() * scale, budget, SUBCELL_DEPTH) {
                kept[r * vp.width + c] = true;
            }
            continue;
        }
        let h = s / 2;
        for (dc, dr) in [(0, 0), (h, 0), (0, h), (h, h)] {
            stack.push((c + dc, r + dr, h));
        }
    }
    kept
}

/// Oracle picture of the Julia set on a viewport, drawn where the pixel
/// cell could not be certified.
pub fn oracle_picture(scene: &Scene, vp: &Viewport) -> Vec<bool> {
    certified_picture(scene, vp, 1u64 << (vp.n + 6).min(24))
}
