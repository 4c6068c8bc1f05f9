use crate::arith::{Ball, Radius, Real};
use crate::geometry::map::MapEval;
use std::f64::consts::PI;

/// Relative slack absorbed into every f64 geometric predicate.
const SLACK: f64 = 1e-12;

/// Three-valued answer of a ball membership test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Membership {
    Inside,
    Outside,
    Undecided,
}

impl Membership {
    pub fn not(self) -> Self {
        match self {
            Membership::Inside => Membership::Outside,
            Membership::Outside => Membership::Inside,
            Membership::Undecided => Membership::Undecided,
        }
    }

    pub fn and(self, o: Self) -> Self {
        use Membership::*;
        match (self, o) {
            (Outside, _) | (_, Outside) => Outside,
            (Inside, Inside) => Inside,
            _ => Undecided,
        }
    }

    pub fn or(self, o: Self) -> Self {
        self.not().and(o.not()).not()
    }

    pub fn is_inside(self) -> bool {
        self == Membership::Inside
    }

    pub fn is_outside(self) -> bool {
        self == Membership::Outside
    }
}

/// A ball in f64 local coordinates: center `(x, y)`, radius `rad`.
///
/// The radius already covers the rounding made when the center was
/// converted to f64.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalBall {
    pub x: f64,
    pub y: f64,
    pub rad: f64,
}

impl LocalBall {
    pub fn new(x: f64, y: f64, rad: f64) -> Self {
        let a = x.hypot(y);
        LocalBall {
            x,
            y,
            rad: rad + a * 4.0 * f64::EPSILON + f64::MIN_POSITIVE,
        }
    }

    pub fn from_ball<T: Real>(b: &Ball<T>) -> Self {
        let (x, y) = b.center_f64();
        let r = f64::from_mag_up(b.radius().to_mag());
        LocalBall::new(x, y, r)
    }

    pub fn abs(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn arg(&self) -> f64 {
        self.y.atan2(self.x)
    }

    /// `rad / |center|`, infinite when the ball may contain 0.
    pub fn rel_err(&self) -> f64 {
        let a = self.abs();
        if a <= self.rad || !a.is_finite() {
            f64::INFINITY
        } else {
            self.rad / a
        }
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.rad.is_finite()
    }
}

/// Reduce an angle to `(-pi, pi]`.
pub fn wrap_angle(t: f64) -> f64 {
    let mut t = t % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Disk `|delta| < radius` about the local origin.
pub fn disk_membership(b: &LocalBall, radius: f64) -> Membership {
    if !b.is_valid() {
        return Membership::Undecided;
    }
    let a = b.abs();
    let s = radius * SLACK;
    if a + b.rad < radius - s {
        Membership::Inside
    } else if a - b.rad > radius + s {
        Membership::Outside
    } else {
        Membership::Undecided
    }
}

/// Half-plane `a x + b y <= c`.
pub fn halfplane_membership(p: &LocalBall, a: f64, b: f64, c: f64) -> Membership {
    if !p.is_valid() {
        return Membership::Undecided;
    }
    let n = a.hypot(b);
    let v = a * p.x + b * p.y - c;
    let s = (a.abs() * p.x.abs() + b.abs() * p.y.abs() + c.abs()) * SLACK;
    if v + p.rad * n < -s {
        Membership::Inside
    } else if v - p.rad * n > s {
        Membership::Outside
    } else {
        Membership::Undecided
    }
}

/// Union of cones `|arg delta - dir| < half_angle`.
pub fn wedge_membership(b: &LocalBall, dirs: &[f64], half_angle: f64) -> Membership {
    let e = b.rel_err();
    if e >= 1.0 {
        return Membership::Undecided;
    }
    let spread = e.asin() * (1.0 + SLACK) + SLACK;
    let t = b.arg();
    let mut all_out = true;
    for &d in dirs {
        let dev = wrap_angle(t - d).abs();
        if dev + spread < half_angle {
            return Membership::Inside;
        }
        if dev - spread <= half_angle {
            all_out = false;
        }
    }
    if all_out {
        Membership::Outside
    } else {
        Membership::Undecided
    }
}

/// Forward-invariant petal region about a parabolic point whose germ is
/// `delta + a delta^(r+1) + ...`.
///
/// In the coordinate `zeta = -1 / (r a delta^r)` the map is close to
/// `zeta + 1`. The petal is the set of `delta != 0` whose `zeta` lies outside
/// the thin wedge `|Im zeta| <= tan(eps) (apex - Re zeta)`. Translation to the
/// right preserves the complement of that wedge.
#[derive(Clone, Debug, PartialEq)]
pub struct Petal {
    pub r: u32,
    /// `log2(r |a|)`.
    pub log2_ra: f64,
    pub arg_a: f64,
    pub apex: f64,
    pub eps: f64,
}

impl Petal {
    pub fn new(r: u32, a: (f64, f64), apex: f64, angle_fraction: f64) -> Self {
        let ra = a.0.hypot(a.1) * r as f64;
        Petal {
            r,
            log2_ra: ra.log2(),
            arg_a: a.1.atan2(a.0),
            apex,
            eps: PI * (1.0 - angle_fraction),
        }
    }

    /// Upper bound on `|delta|` over the petal.
    pub fn outer_radius(&self) -> f64 {
        let m = self.apex * self.eps.sin();
        (-(self.log2_ra + m.log2()) / self.r as f64).exp2()
    }

    /// Attracting directions, `(pi - arg a + 2 pi k) / r`.
    pub fn attracting_directions(&self) -> Vec<f64> {
        (0..self.r)
            .map(|k| wrap_angle((PI - self.arg_a + 2.0 * PI * k as f64) / self.r as f64))
            .collect()
    }

    /// Repelling directions, `(-arg a + 2 pi k) / r`.
    pub fn repelling_directions(&self) -> Vec<f64> {
        (0..self.r)
            .map(|k| wrap_angle((-self.arg_a + 2.0 * PI * k as f64) / self.r as f64))
            .collect()
    }

    /// `zeta` for a point given in f64, used by sampling checks.
    pub fn zeta(&self, x: f64, y: f64) -> (f64, f64) {
        let l = -self.log2_ra - self.r as f64 * x.hypot(y).log2();
        let phi = PI - self.r as f64 * y.atan2(x) - self.arg_a;
        let m = l.exp2();
        (m * phi.cos(), m * phi.sin())
    }

    pub fn membership(&self, b: &LocalBall) -> Membership {
        let e = b.rel_err();
        if e >= 0.5 {
            return Membership::Undecided;
        }
        let r = self.r as f64;
        let kappa = (1.0 / (1.0 - e)).powf(r) - 1.0;
        let kappa = kappa * (1.0 + SLACK) + SLACK;
        let log2_mag = -self.log2_ra - r * b.abs().log2();
        let phi = PI - r * b.arg() - self.arg_a;
        // Work with zeta / |zeta|.
        let off = if log2_mag > 1000.0 {
            0.0
        } else {
            self.apex * (-log2_mag).exp2()
        };
        let zx = phi.cos() - off;
        let zy = phi.sin();
        let dist = self.wedge_distance(zx, zy);
        match dist {
            WedgeDist::Outside(d) if d > kappa => Membership::Inside,
            WedgeDist::Inside(d) if d > kappa => Membership::Outside,
            _ => Membership::Undecided,
        }
    }

    /// Lower bound on the distance from the ball to the complement of the
    /// petal, when the ball is certified inside.
    pub fn clearance(&self, b: &LocalBall) -> Option<f64> {
        if self.membership(b) != Membership::Inside {
            return None;
        }
        let r = self.r as f64;
        let a = b.abs();
        let log2_mag = -self.log2_ra - r * a.log2();
        let phi = PI - r * b.arg() - self.arg_a;
        let off = if log2_mag > 1000.0 {
            0.0
        } else {
            self.apex * (-log2_mag).exp2()
        };
        let d = match self.wedge_distance(phi.cos() - off, phi.sin()) {
            WedgeDist::Outside(d) => d / (1.0 + SLACK) - SLACK,
            WedgeDist::Inside(_) => return None,
        };
        if d <= 0.0 {
            return None;
        }
        let c = a * (1.0 - (1.0 + d).powf(-1.0 / r)) / (1.0 + SLACK) - b.rad;
        (c > 0.0).then_some(c)
    }

    fn wedge_distance(&self, zx: f64, zy: f64) -> WedgeDist {
        let n = zx.hypot(zy);
        let dev = ((zy.abs()).atan2(-zx)).abs();
        if dev <= self.eps {
            WedgeDist::Inside(n * (self.eps - dev).sin())
        } else if dev <= self.eps + PI / 2.0 {
            WedgeDist::Outside(n * (dev - self.eps).sin())
        } else {
            WedgeDist::Outside(n)
        }
    }
}

enum WedgeDist {
    Inside(f64),
    Outside(f64),
}

/// A primitive shape in coordinates centered at a site.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalShape {
    Disk { radius: f64 },
    Wedge { dirs: Vec<f64>, half_angle: f64 },
    Petal(Petal),
}

impl LocalShape {
    pub fn membership(&self, b: &LocalBall) -> Membership {
        match self {
            LocalShape::Disk { radius } => disk_membership(b, *radius),
            LocalShape::Wedge { dirs, half_angle } => wedge_membership(b, dirs, *half_angle),
            LocalShape::Petal(p) => p.membership(b),
        }
    }
}

/// Boolean combination of primitive shapes and preimages.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    All,
    Empty,
    Disk { center: (f64, f64), radius: f64 },
    HalfPlane { a: f64, b: f64, c: f64 },
    Local { site: usize, shape: LocalShape },
    Not(Box<Region>),
    And(Vec<Region>),
    Or(Vec<Region>),
    Preimage { depth: usize, inner: Box<Region> },
}

/// What membership tests need: site locations and the map.
pub struct RegionCtx<'a, T: Real> {
    pub sites: &'a [Ball<T>],
    pub map: &'a MapEval<T>,
}

impl<'a, T: Real> RegionCtx<'a, T> {
    pub fn local(&self, w: &Ball<T>, site: usize) -> LocalBall {
        LocalBall::from_ball(&w.sub_ref(&self.sites[site]))
    }

    pub fn membership(&self, w: &Ball<T>, region: &Region) -> Membership {
        match region {
            Region::All => Membership::Inside,
            Region::Empty => Membership::Outside,
            Region::Disk { center, radius } => {
                let b = LocalBall::from_ball(w);
                let b = LocalBall::new(b.x - center.0, b.y - center.1, b.rad);
                disk_membership(&b, *radius)
            }
            Region::HalfPlane { a, b, c } => {
                halfplane_membership(&LocalBall::from_ball(w), *a, *b, *c)
            }
            Region::Local { site, shape } => shape.membership(&self.local(w, *site)),
            Region::Not(r) => self.membership(w, r).not(),
            Region::And(rs) => {
                let mut acc = Membership::Inside;
                for r in rs {
                    acc = acc.and(self.membership(w, r));
                    if acc.is_outside() {
                        break;
                    }
                }
                acc
            }
            Region::Or(rs) => {
                let mut acc = Membership::Outside;
                for r in rs {
                    acc = acc.or(self.membership(w, r));
                    if acc.is_inside() {
                        break;
                    }
                }
                acc
            }
            Region::Preimage { depth, inner } => {
                let mut z = w.clone();
                for _ in 0..*depth {
                    match self.map.eval(&z) {
                        Some(v) if v.is_finite() => z = v,
                        _ => return Membership::Undecided,
                    }
                }
                self.membership(&z, inner)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_valued_logic() {
        use Membership::*;
        assert_eq!(Inside.and(Undecided), Undecided);
        assert_eq!(Outside.and(Undecided), Outside);
        assert_eq!(Inside.or(Undecided), Inside);
        assert_eq!(Outside.or(Undecided), Undecided);
    }

    #[test]
    fn disk_cases() {
        assert_eq!(
            disk_membership(&LocalBall::new(10.0, 0.0, 0.1), 2.0),
            Membership::Outside
        );
        assert_eq!(
            disk_membership(&LocalBall::new(0.5, 0.0, 0.1), 1.0),
            Membership::Inside
        );
        assert_eq!(
            disk_membership(&LocalBall::new(1.0, 0.0, 0.1), 1.0),
            Membership::Undecided
        );
    }

    #[test]
    fn wedge_axis_point() {
        let b = LocalBall::new(0.3, 0.0, 1e-9);
        assert_eq!(wedge_membership(&b, &[0.0], 0.01), Membership::Inside);
        let b = LocalBall::new(0.0, 0.3, 1e-9);
        assert_eq!(wedge_membership(&b, &[0.0], 0.01), Membership::Outside);
    }

    #[test]
    fn petal_directions() {
        let p = Petal::new(1, (1.0, 0.0), 48.0, 63.0 / 64.0);
        assert!((p.attracting_directions()[0] - PI).abs() < 1e-12);
        assert!(p.repelling_directions()[0].abs() < 1e-12);
        let q = Petal::new(3, (1.0, 0.0), 64.0, 63.0 / 64.0);
        assert_eq!(q.attracting_directions().len(), 3);
    }

    #[test]
    fn petal_membership_basic() {
        let p = Petal::new(1, (1.0, 0.0), 48.0, 63.0 / 64.0);
        // attracting axis, small delta
        assert_eq!(
            p.membership(&LocalBall::new(-1e-3, 0.0, 1e-9)),
            Membership::Inside
        );
        // repelling axis
        assert_eq!(
            p.membership(&LocalBall::new(1e-3, 0.0, 1e-9)),
            Membership::Outside
        );
        // far away
        assert_eq!(
            p.membership(&LocalBall::new(-1.0, 0.0, 1e-9)),
            Membership::Outside
        );
        assert!(p.outer_radius() < 0.5);
    }
}
