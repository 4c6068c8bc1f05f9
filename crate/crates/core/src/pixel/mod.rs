//! The pixel function: a certified choice between "near the Julia set" and
//! "far from it" for one dyadic point.

mod orbit;

use crate::arith::{BigFloat, Mag, Radius};
use crate::geometry::coarse::CoarsePicture;
use crate::geometry::map::CQ;
use crate::geometry::scene::Scene;
use num_traits::ToPrimitive;
use orbit::{run_tier, TierCtx, TierOutcome};
use serde::Serialize;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PixelError {
    #[error("precision exhausted after {0} escalations")]
    PrecisionExhausted(u32),
    #[error("region membership unresolvable at {0} bits")]
    MembershipUnresolvable(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Value {
    One,
    Zero,
}

/// How the orbit loop ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Exit {
    /// Coarse-picture estimate outside `V` and `E1`.
    Coarse,
    /// Distance lower bound from a trap region; Zero only.
    Trap,
    /// Inside the tiny ball around a (pre)parabolic point.
    NearSite,
    /// Line estimate in `E2 - A1`.
    Line,
    /// Step budget `N` exhausted.
    Budget,
    /// Loop cap reached before any exit applied.
    Cap,
}

/// Per-step counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StepCounts {
    /// Loop iterations.
    pub iterations: u64,
    pub step7: u64,
    pub step9: u64,
    pub step11: u64,
    /// Long blocks that fell back to one plain step.
    pub short_blocks: u64,
    /// Plain steps taken when no rule applied.
    pub plain: u64,
    /// Equivalent number of map applications, saturating.
    pub map_steps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub exit: Exit,
    /// Distance estimate at the final iterate.
    pub e: Option<f64>,
    /// `log2` of the derivative bounds.
    pub log2_d_lo: f64,
    pub log2_d_hi: f64,
    pub counts: StepCounts,
    pub n_budget: u64,
    pub precision: u32,
    pub escalations: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PixelDecision {
    pub value: Value,
    pub certificate: Certificate,
}

/// `ceil(factor * n^2) + 64`.
pub fn precision_for_pixel(n: u32, factor: &num_rational::BigRational) -> u32 {
    let n2 = num_rational::BigRational::from_integer((n as u64 * n as u64).into());
    let v = (factor * n2).ceil().to_integer();
    v.to_u32().unwrap_or(u32::MAX - 64).saturating_add(64)
}

/// `ceil(log_{c0}(K 2^n))`.
#[allow(non_snake_case)]
pub fn compute_N(n: u32, c0: f64, k: f64) -> u64 {
    let v = (n as f64 + k.log2()) / c0.log2();
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r.max(0.0) as u64
    } else {
        v.ceil().max(0.0) as u64
    }
}

/// `[e / (8 D_hi), 16 e / D_lo]`.
pub fn koebe_bounds(e: f64, d_lo: f64, d_hi: f64) -> (f64, f64) {
    (e / (8.0 * d_hi), 16.0 * e / d_lo)
}

/// Koebe bounds in extended range.
pub fn koebe_bounds_mag(e: Mag, d_lo: Mag, d_hi: Mag) -> (Mag, Mag) {
    (
        e.div_down(d_hi.mul_up(Mag::from_f64(8.0))),
        e.mul_up(Mag::from_f64(16.0)).div_up(d_lo),
    )
}

/// Exponent `beta` of the step-8 cutoff `|w - q| < 2^{-beta n}`.
pub fn beta(n: u32, n_budget: u64, u_pre: u64, d_lo: f64) -> u64 {
    let l = (1.0 / d_lo).log2().max(0.0);
    let eta = ((n_budget + u_pre) as f64 * l / n.max(1) as f64).ceil();
    (9.0 + l + eta).ceil() as u64
}

/// Shared evaluation state for one scene: the coarse picture and the
/// per-precision evaluators.
pub struct PixelEngine<'a> {
    pub scene: &'a Scene,
    pub coarse: &'a CoarsePicture,
    base: TierCtx<f64>,
    mp: Mutex<HashMap<u32, Arc<TierCtx<BigFloat>>>>,
    /// Report escalations on stderr; set from `PJULIA_TRACE`.
    pub trace: bool,
}

impl<'a> PixelEngine<'a> {
    pub fn new(scene: &'a Scene, coarse: &'a CoarsePicture) -> Self {
        PixelEngine {
            scene,
            coarse,
            base: TierCtx::new(scene, 53),
            mp: Mutex::new(HashMap::new()),
            trace: std::env::var_os("PJULIA_TRACE").is_some(),
        }
    }

    fn mp_ctx(&self, prec: u32) -> Arc<TierCtx<BigFloat>> {
        let mut m = self.mp.lock().unwrap();
        m.entry(prec)
            .or_insert_with(|| Arc::new(TierCtx::new(self.scene, prec)))
            .clone()
    }

    /// Decide the pixel function at an exact point.
    pub fn decide(&self, z: &CQ, n: u32) -> Result<PixelDecision, PixelError> {
        let scene = self.scene;
        let p0 = precision_for_pixel(n, &scene.precision_factor);
        let tiers = scene.escalations + 1;
        let mut last_unresolved = match run_tier(self, &self.base, z, n, false)? {
            TierOutcome::Done(d) => return Ok(d),
            TierOutcome::Escalate { unresolved, why } => {
                self.trace_escalation(z, 53, why);
                unresolved
            }
        };
        for k in 0..tiers {
            let prec = p0.saturating_mul(1 << k);
            let ctx = self.mp_ctx(prec);
            let last = k + 1 == tiers;
            match run_tier(self, &ctx, z, n, last)? {
                TierOutcome::Done(mut d) => {
                    d.certificate.escalations = k + 1;
                    return Ok(d);
                }
                TierOutcome::Escalate { unresolved, why } => {
                    self.trace_escalation(z, prec, why);
                    last_unresolved = unresolved
                }
            }
        }
        let top = p0.saturating_mul(1 << (tiers - 1));
        if last_unresolved {
            Err(PixelError::MembershipUnresolvable(top))
        } else {
            Err(PixelError::PrecisionExhausted(tiers))
        }
    }

    fn trace_escalation(&self, z: &CQ, prec: u32, why: &str) {
        if self.trace {
            let (x, y) = z.to_f64();
            eprintln!("escalate at ({x}, {y}) from {prec} bits: {why}");
        }
    }

    /// Decide at the dyadic point `(i + j i) / 2^level`.
    pub fn decide_dyadic(&self, i: i64, j: i64, level: u32, n: u32) -> Result<PixelDecision, PixelError> {
        self.decide(&dyadic(i, j, level), n)
    }
}

/// `(i + j i) / 2^level` exactly.
pub fn dyadic(i: i64, j: i64, level: u32) -> CQ {
    let d = num_bigint::BigInt::from(1) << level as usize;
    CQ::new(
        num_rational::BigRational::new(i.into(), d.clone()),
        num_rational::BigRational::new(j.into(), d),
    )
}

/// Decide the pixel function at `z` with resolution `n`.
pub fn decide_point(
    z: &CQ,
    n: u32,
    scene: &Scene,
    coarse: &CoarsePicture,
) -> Result<PixelDecision, PixelError> {
    PixelEngine::new(scene, coarse).decide(z, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn n_examples() {
        assert_eq!(compute_N(10, 2.0, 1.0), 10);
        assert_eq!(compute_N(10, 2.0, 4.0), 12);
        assert_eq!(compute_N(10, 1.5, 1.0), 18);
    }

    #[test]
    fn koebe_examples() {
        assert_eq!(koebe_bounds(1.0, 1.0, 1.0), (0.125, 16.0));
        assert_eq!(koebe_bounds(1.0 / 32.0, 1.0, 2.0), (1.0 / 512.0, 0.5));
        let (a, b) = koebe_bounds(3.0, 1.0, 1.5);
        let (c, d) = koebe_bounds(1.0, 1.0, 1.5);
        assert!((a - 3.0 * c).abs() < 1e-15 && (b - 3.0 * d).abs() < 1e-12);
        let (lo, hi) = koebe_bounds_mag(Mag::from_f64(1.0), Mag::from_f64(1.0), Mag::from_f64(1.0));
        assert!(lo.to_f64() <= 0.125 && hi.to_f64() >= 16.0);
    }

    #[test]
    fn precision_examples() {
        let one = BigRational::from_integer(1.into());
        let two = BigRational::from_integer(2.into());
        assert_eq!(precision_for_pixel(10, &one), 164);
        assert_eq!(precision_for_pixel(1, &one), 65);
        assert_eq!(precision_for_pixel(30, &two), 1864);
        assert!(precision_for_pixel(11, &one) > precision_for_pixel(10, &one));
    }
}
