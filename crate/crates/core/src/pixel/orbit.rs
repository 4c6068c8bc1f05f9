use super::{beta, compute_N, Certificate, Exit, PixelDecision, PixelEngine, PixelError, StepCounts, Value};
use crate::arith::{ball_abs, Ball, Mag, Radius, Real};
use crate::geometry::map::{MapEval, CQ};
use crate::geometry::region::{
    disk_membership, wedge_membership, wrap_angle, LocalBall, LocalShape, Membership, Region,
    RegionCtx,
};
use crate::geometry::scene::Scene;
use crate::longiter::{iterate_exact, long_iterate, LongIterError};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;

/// Largest iterate radius before the tier gives up.
const MAX_RADIUS: f64 = 1e-4;

pub(super) struct TierCtx<T: Real> {
    prec: u32,
    map: MapEval<T>,
    sites: Vec<Ball<T>>,
    u_tilde: Region,
    traps: Vec<Region>,
}

impl<T: Real> TierCtx<T> {
    pub(super) fn new(scene: &Scene, prec: u32) -> Self {
        let mut traps = Vec::new();
        if let Region::And(parts) = &scene.u_tilde {
            if let Some(Region::Not(inner)) = parts.get(1) {
                if let Region::Or(ts) = inner.as_ref() {
                    traps = ts.clone();
                }
            }
        }
        TierCtx {
            prec,
            map: scene.map.evaluator(prec),
            sites: scene.site_balls(prec),
            u_tilde: scene.u_tilde.clone(),
            traps,
        }
    }

    fn region(&self) -> RegionCtx<'_, T> {
        RegionCtx {
            sites: &self.sites,
            map: &self.map,
        }
    }

    fn local(&self, w: &Ball<T>, site: usize) -> LocalBall {
        LocalBall::from_ball(&w.sub_ref(&self.sites[site]))
    }

    /// Lower bound on the distance from `w` to the complement of the traps.
    fn trap_clearance(&self, w: &Ball<T>) -> Option<f64> {
        let mut best: Option<f64> = None;
        for t in &self.traps {
            let c = match t {
                Region::Local {
                    site,
                    shape: LocalShape::Petal(p),
                } => p.clearance(&self.local(w, *site)),
                Region::Disk { center, radius } => {
                    let b = LocalBall::from_ball(w);
                    let d = radius - (b.x - center.0).hypot(b.y - center.1) - b.rad;
                    (d > 0.0).then_some(d / (1.0 + 1e-12))
                }
                _ => None,
            };
            if let Some(c) = c {
                best = Some(best.map_or(c, |b: f64| b.max(c)));
            }
        }
        best
    }
}

fn esc(why: &'static str) -> TierOutcome {
    TierOutcome::Escalate {
        unresolved: false,
        why,
    }
}

pub(super) enum TierOutcome {
    Done(PixelDecision),
    /// Retry at higher precision; `unresolved` if caused by region tests.
    Escalate { unresolved: bool, why: &'static str },
}

/// Forward orbit of the current iterate, with `U~` membership of each point.
struct Ahead<T: Real> {
    pts: VecDeque<(Ball<T>, Membership)>,
    /// First index certified outside `U~`; all later ones are too.
    stop: Option<usize>,
    broken: bool,
}

impl<T: Real> Ahead<T> {
    fn new(w: Ball<T>, ctx: &TierCtx<T>) -> Self {
        let mut a = Ahead {
            pts: VecDeque::new(),
            stop: None,
            broken: false,
        };
        a.reset(w, ctx);
        a
    }

    fn reset(&mut self, w: Ball<T>, ctx: &TierCtx<T>) {
        self.pts.clear();
        self.stop = None;
        self.broken = false;
        self.push(w, ctx);
    }

    fn push(&mut self, w: Ball<T>, ctx: &TierCtx<T>) {
        let m = if self.stop.is_some() {
            Membership::Outside
        } else {
            ctx.region().membership(&w, &ctx.u_tilde)
        };
        if m.is_outside() && self.stop.is_none() {
            self.stop = Some(self.pts.len());
        }
        self.pts.push_back((w, m));
    }

    fn current(&self) -> &Ball<T> {
        &self.pts[0].0
    }

    fn extend_one(&mut self, ctx: &TierCtx<T>) -> bool {
        let last = &self.pts.back().unwrap().0;
        match ctx.map.eval(last) {
            Some(v) if v.is_finite() => {
                self.push(v, ctx);
                true
            }
            _ => false,
        }
    }

    fn ensure(&mut self, k: usize, ctx: &TierCtx<T>) {
        while self.pts.len() <= k && self.stop.is_none() && !self.broken {
            let big = f64::from_mag_up(self.pts.back().unwrap().0.radius().to_mag()) > 1.0;
            if big || !self.extend_one(ctx) {
                self.broken = true;
            }
        }
    }

    /// Membership of the current iterate in `r^{-k}(U~)`.
    fn preimage(&mut self, k: usize, ctx: &TierCtx<T>) -> Membership {
        self.ensure(k, ctx);
        match self.stop {
            Some(s) if s <= k => Membership::Outside,
            _ if k < self.pts.len() => self.pts[k].1,
            _ => Membership::Undecided,
        }
    }

    /// Move to the next iterate; `false` if the map could not be evaluated.
    fn advance(&mut self, ctx: &TierCtx<T>) -> bool {
        if self.pts.len() < 2 && !self.extend_one(ctx) {
            return false;
        }
        self.pts.pop_front();
        if let Some(s) = self.stop {
            self.stop = Some(s.saturating_sub(1));
        }
        true
    }
}

struct State {
    d_lo: Mag,
    d_hi: Mag,
    counts: StepCounts,
    n_budget: u64,
    prec: u32,
}

impl State {
    fn times<T: Real>(&mut self, dw: &Ball<T>) -> bool {
        let (lo, hi) = ball_abs(dw);
        self.d_lo = self.d_lo.mul_down(lo);
        self.d_hi = self.d_hi.mul_up(hi);
        !self.d_lo.is_zero() && self.d_hi <= self.d_lo.mul_down(Mag::from_f64(2.0))
    }

    fn done(&self, value: Value, exit: Exit, e: Option<f64>) -> TierOutcome {
        TierOutcome::Done(PixelDecision {
            value,
            certificate: Certificate {
                exit,
                e,
                log2_d_lo: self.d_lo.log2(),
                log2_d_hi: self.d_hi.log2(),
                counts: self.counts,
                n_budget: self.n_budget,
                precision: self.prec,
                escalations: 0,
            },
        })
    }

    /// Threshold rule on `e / D` for an estimate with `e <= d(w, J) <= 2e`.
    fn decide(&self, e: f64, exit: Exit, n: u32) -> TierOutcome {
        let em = Mag::from_f64(e);
        let x_hi = em.div_up(self.d_lo);
        let x_lo = em.div_down(self.d_hi);
        if x_hi < Mag::pow2(4 - n as i64) {
            self.done(Value::One, exit, Some(e))
        } else if x_lo > Mag::pow2(3 - n as i64) {
            self.done(Value::Zero, exit, Some(e))
        } else {
            esc("estimate between thresholds")
        }
    }
}

/// Distance from a local point to the union of rays from `0`.
fn ray_distance(b: &LocalBall, dirs: &[f64]) -> f64 {
    let a = b.abs();
    let t = b.arg();
    dirs.iter()
        .map(|d| {
            let dev = wrap_angle(t - d).abs();
            if dev <= FRAC_PI_2 {
                a * dev.sin()
            } else {
                a
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Largest `m_exp` with `|delta| < 2^-m_exp`.
fn m_exponent(hi: Mag) -> Option<u32> {
    if hi.is_zero() {
        return None;
    }
    let mut m = (-hi.log2()).floor() as i64 + 1;
    while m > 0 && !(hi < Mag::pow2(-m)) {
        m -= 1;
    }
    (m > 0).then_some(m as u32)
}

pub(super) fn run_tier<T: Real>(
    eng: &PixelEngine<'_>,
    ctx: &TierCtx<T>,
    z: &CQ,
    n: u32,
    _last: bool,
) -> Result<TierOutcome, PixelError> {
    let scene = eng.scene;
    let np = scene.parabolic.len();
    let n_budget = compute_N(n, scene.c0, scene.poincare_k);
    let u_pre = scene.preparabolic.len().min(1) as u64;
    let cutoff = Mag::pow2(-((beta(n, n_budget, u_pre, scene.d_lo) * n as u64).min(1 << 40) as i64));
    let cap = 64 * n as u64 * n as u64 + (1 << 14);
    let q = scene.u_depth;
    let rel_bits = ctx.prec.saturating_sub(4).min(32);

    let mut st = State {
        d_lo: Mag::from_f64(1.0),
        d_hi: Mag::from_f64(1.0),
        counts: StepCounts::default(),
        n_budget,
        prec: ctx.prec,
    };
    let mut ahead = Ahead::new(z.to_ball::<T>(ctx.prec), ctx);

    // One plain step; at a critical point the coarse estimate is the only
    // way out.
    macro_rules! step {
        () => {
            let cur = ahead.current().clone();
            match plain_step(ctx, &cur, &mut ahead, &mut st) {
                Step::Moved => {}
                Step::Critical => {
                    let wl = LocalBall::from_ball(ahead.current());
                    return Ok(match eng.coarse.coarse_distance(&wl) {
                        Ok(e) => st.decide(e, Exit::Coarse, n),
                        Err(_) => esc("critical point on the orbit"),
                    });
                }
                Step::Failed(why) => return Ok(esc(why)),
            }
        };
    }

    'main: loop {
        st.counts.iterations += 1;
        if st.counts.iterations > cap {
            return Ok(st.done(Value::One, Exit::Cap, None));
        }
        let w = ahead.current().clone();
        let wl = LocalBall::from_ball(&w);
        if !wl.is_valid() || wl.rad > MAX_RADIUS {
            return Ok(TierOutcome::Escalate {
                unresolved: true,
                why: "iterate radius too large",
            });
        }
        let locals: Vec<LocalBall> = (0..ctx.sites.len()).map(|s| ctx.local(&w, s)).collect();
        let e1_of = |s: usize| {
            if s < np {
                scene.parabolic[s].e1
            } else {
                scene.preparabolic[s - np].e1
            }
        };
        let mut e1 = Membership::Outside;
        for (s, l) in locals.iter().enumerate() {
            e1 = e1.or(disk_membership(l, e1_of(s)));
        }

        // Outside V and E1: coarse estimate, or a trap bound.
        if e1.is_outside() && ahead.preimage(q + 1, ctx).is_outside() {
            if let Ok(e) = eng.coarse.coarse_distance(&wl) {
                return Ok(st.decide(e, Exit::Coarse, n));
            }
            if let Some(c) = ctx.trap_clearance(&w) {
                let lo = Mag::from_f64(c).div_down(st.d_hi.mul_up(Mag::from_f64(8.0)));
                if lo > Mag::pow2(-(n as i64)) {
                    return Ok(st.done(Value::Zero, Exit::Trap, Some(c)));
                }
            }
        }

        // Tiny ball around a site.
        for s in 0..ctx.sites.len() {
            let d = w.sub_ref(&ctx.sites[s]);
            if d.abs_hi().to_mag() < cutoff {
                return Ok(st.done(Value::One, Exit::NearSite, None));
            }
        }

        // E2 - A1: line estimate.
        for (s, l) in locals.iter().enumerate() {
            let (e2, a1, dirs) = if s < np {
                let p = &scene.parabolic[s];
                (p.e2, p.alpha1, &p.repelling)
            } else {
                let p = &scene.preparabolic[s - np];
                (p.e2, p.alpha1, &p.directions)
            };
            if disk_membership(l, e2).is_inside() && wedge_membership(l, dirs, a1).is_outside() {
                let t = ray_distance(l, dirs);
                if l.rad <= t / 64.0 {
                    return Ok(st.decide(t / 2.0, Exit::Line, n));
                }
            }
        }

        // E2 and A2 at a parabolic point: long block.
        for s in 0..np {
            let p = &scene.parabolic[s];
            let l = &locals[s];
            if !(disk_membership(l, p.e2).is_inside()
                && wedge_membership(l, &p.repelling, p.alpha2).is_inside())
            {
                continue;
            }
            st.counts.step11 += 1;
            // Consecutive blocks stay in local coordinates while the orbit is
            // inside E1 and A1, where no other rule applies.
            let mut delta = w.sub_ref(&ctx.sites[s]);
            let mut first = true;
            loop {
                let m_exp = match m_exponent(delta.abs_hi().to_mag()) {
                    Some(m) => m,
                    None => return Ok(st.done(Value::One, Exit::NearSite, None)),
                };
                let s_bits = m_exp + rel_bits;
                let (d2, dd) = match long_iterate(&p.germ, &delta, m_exp, s_bits) {
                    Ok(v) => v,
                    Err(LongIterError::IterationTooShort) | Err(LongIterError::BallTooLarge) if first => {
                        st.counts.short_blocks += 1;
                        step!();
                        continue 'main;
                    }
                    Err(LongIterError::IterationTooShort) | Err(LongIterError::BallTooLarge) => {
                        ahead.reset(delta.add_ref(&ctx.sites[s]), ctx);
                        continue 'main;
                    }
                    Err(_) => return Ok(esc("long iteration failed")),
                };
                first = false;
                let ell = p.germ.ell(m_exp);
                let nl = LocalBall::from_ball(&d2);
                if disk_membership(&nl, p.e2).is_inside()
                    && wedge_membership(&nl, &p.repelling, p.alpha2).is_outside()
                {
                    let (nw, dd, steps) =
                        match search_exit(ctx, s, &p.germ, &delta, &ell, s_bits, &p.repelling, p.alpha1) {
                            Ok(v) => v,
                            Err(_) => return Ok(esc("exit search failed")),
                        };
                    if !st.times(&dd) {
                        return Ok(esc("derivative ratio after block"));
                    }
                    let k = u64::try_from(&steps).unwrap_or(u64::MAX);
                    st.counts.map_steps = st.counts.map_steps.saturating_add(k);
                    ahead.reset(nw, ctx);
                    continue 'main;
                }
                if !st.times(&dd) {
                    return Ok(esc("derivative ratio after block"));
                }
                let k = u64::try_from(&ell).unwrap_or(u64::MAX);
                st.counts.map_steps = st.counts.map_steps.saturating_add(k);
                delta = d2;
                let stay = disk_membership(&nl, p.e1).is_inside()
                    && wedge_membership(&nl, &p.repelling, p.alpha1).is_inside()
                    && delta.abs_hi().to_mag() >= cutoff
                    && nl.rad <= MAX_RADIUS
                    && st.counts.iterations < cap;
                if !stay {
                    ahead.reset(delta.add_ref(&ctx.sites[s]), ctx);
                    continue 'main;
                }
                st.counts.iterations += 1;
                st.counts.step11 += 1;
            }
        }

        // E2 and A2 at a preparabolic point: one step.
        for (i, p) in scene.preparabolic.iter().enumerate() {
            let l = &locals[np + i];
            if disk_membership(l, p.e2).is_inside()
                && wedge_membership(l, &p.directions, p.alpha2).is_inside()
            {
                st.counts.step9 += 1;
                step!();
                continue 'main;
            }
        }

        // Near a site the angular tests need the ball small against |w - site|.
        for (s, l) in locals.iter().enumerate() {
            let e2 = if s < np {
                scene.parabolic[s].e2
            } else {
                scene.preparabolic[s - np].e2
            };
            if !disk_membership(l, e2).is_outside() && l.rad * 256.0 > l.abs() {
                return Ok(TierOutcome::Escalate {
                    unresolved: true,
                    why: "ball too large near a site",
                });
            }
        }

        // U - E1: one step against the budget.
        if e1.is_outside() && ahead.preimage(q, ctx).is_inside() {
            st.counts.step7 += 1;
            if st.counts.step7 > n_budget {
                return Ok(st.done(Value::One, Exit::Budget, None));
            }
        } else {
            st.counts.plain += 1;
        }
        step!();
    }
}

enum Step {
    Moved,
    /// The derivative bound reached zero.
    Critical,
    Failed(&'static str),
}

fn plain_step<T: Real>(ctx: &TierCtx<T>, w: &Ball<T>, ahead: &mut Ahead<T>, st: &mut State) -> Step {
    let dw = match ctx.map.deriv(w) {
        Some(d) => d,
        None => return Step::Failed("derivative undefined"),
    };
    if dw.contains_zero() {
        return Step::Critical;
    }
    st.counts.map_steps = st.counts.map_steps.saturating_add(1);
    if !st.times(&dw) {
        return Step::Failed("derivative ratio after step");
    }
    if !ahead.advance(ctx) {
        return Step::Failed("map undefined");
    }
    Step::Moved
}

/// Smallest `u <= ell` whose iterate is certified outside `A1`, found by
/// bisection on exact iterates.
#[allow(clippy::too_many_arguments)]
fn search_exit<T: Real>(
    ctx: &TierCtx<T>,
    site: usize,
    germ: &crate::longiter::ParabolicGerm,
    delta: &Ball<T>,
    ell: &BigUint,
    s_bits: u32,
    dirs: &[f64],
    a1: f64,
) -> Result<(Ball<T>, Ball<T>, BigUint), LongIterError> {
    let mut lo = BigUint::zero();
    let mut hi = ell.clone();
    let mut best = None;
    while &hi - &lo > BigUint::one() {
        let mid: BigUint = (&lo + &hi) >> 1;
        let (d, dd) = iterate_exact(germ, delta, &mid, s_bits)?;
        let l = LocalBall::from_ball(&d);
        if wedge_membership(&l, dirs, a1).is_outside() {
            hi = mid;
            best = Some((d, dd));
        } else {
            lo = mid;
        }
    }
    let (d, dd) = match best {
        Some(v) => v,
        None => iterate_exact(germ, delta, &hi, s_bits)?,
    };
    Ok((d.add_ref(&ctx.sites[site]), dd, hi))
}
