use crate::arith::{ball_abs, parse_rational, Ball, BigFloat, Mag, Radius, Real};
use crate::geometry::map::{RationalMap, CQ};
use crate::geometry::region::{LocalShape, Region};
use crate::geometry::trap::{build_trap_region, GermF64, TrapError, TrapRegion};
use crate::longiter::ParabolicGerm;
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invariant violation (item {item}): {msg}")]
    InvariantViolation { item: u8, msg: String },
    #[error("Newton iteration diverged after {0} steps")]
    NewtonDiverged(usize),
    #[error(transparent)]
    Trap(#[from] TrapError),
}

fn violation(item: u8, msg: impl Into<String>) -> SceneError {
    SceneError::InvariantViolation {
        item,
        msg: msg.into(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub num: Vec<String>,
    #[serde(default = "one_vec")]
    pub den: Vec<String>,
}

fn one_vec() -> Vec<String> {
    vec!["1".into()]
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParabolicConfig {
    /// Approximate location, refined by Newton's method.
    pub approx: [String; 2],
    #[serde(default = "one_u32")]
    pub period: u32,
    pub degeneracy: u32,
    pub petal_apex: f64,
    #[serde(default = "default_fraction")]
    pub angle_fraction: String,
    pub e1_exp: u32,
    pub e2_exp: u32,
    /// Half-angle of `A_2` in units of `pi`.
    pub wedge: String,
}

fn one_u32() -> u32 {
    1
}

fn default_fraction() -> String {
    "63/64".into()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PreparabolicConfig {
    pub point: [String; 2],
    /// Index of the parabolic point it lands on in one step.
    pub target: usize,
    pub e1_exp: u32,
    pub e2_exp: u32,
    pub wedge: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AttractingConfig {
    pub center: [String; 2],
    pub radius: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RegionsConfig {
    pub u_depth: usize,
    pub escape_radius: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub c0: String,
    pub poincare_k: String,
    pub d_lo: String,
    pub sep_d: String,
    pub bound: String,
    pub c_pix: u32,
    #[serde(default)]
    pub level_shift: u32,
    #[serde(default = "one_string")]
    pub precision_factor: String,
    #[serde(default = "default_escalations")]
    pub escalations: u32,
}

fn one_string() -> String {
    "1".into()
}

fn default_escalations() -> u32 {
    3
}

/// Scene file contents.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub schema: u32,
    pub name: String,
    pub map: MapConfig,
    #[serde(default)]
    pub parabolic: Vec<ParabolicConfig>,
    #[serde(default)]
    pub preparabolic: Vec<PreparabolicConfig>,
    #[serde(default)]
    pub attracting: Vec<AttractingConfig>,
    #[serde(default)]
    pub critical_points: Vec<[String; 2]>,
    pub regions: RegionsConfig,
    pub constants: ConstantsConfig,
}

impl SceneConfig {
    pub fn from_toml(s: &str) -> Result<Self, SceneError> {
        toml::from_str(s).map_err(|e| SceneError::Schema(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn rat(s: &str, what: &str) -> Result<BigRational, SceneError> {
    parse_rational(s).ok_or_else(|| SceneError::Schema(format!("{what}: cannot parse {s:?}")))
}

fn f64_of(s: &str, what: &str) -> Result<f64, SceneError> {
    Ok(rat(s, what)?.to_f64().unwrap_or(f64::NAN))
}

fn cq(v: &[String; 2], what: &str) -> Result<CQ, SceneError> {
    Ok(CQ::new(rat(&v[0], what)?, rat(&v[1], what)?))
}

/// A parabolic fixed point with its germ and local regions.
#[derive(Debug)]
pub struct ParabolicSite {
    pub point: CQ,
    pub point_f64: (f64, f64),
    pub r: u32,
    pub germ: Arc<ParabolicGerm>,
    /// Leading germ coefficient `a` of `delta + a delta^(r+1)`.
    pub a: (f64, f64),
    pub trap: TrapRegion,
    pub e1: f64,
    pub e2: f64,
    pub e1_exp: u32,
    pub e2_exp: u32,
    pub alpha2: f64,
    pub alpha1: f64,
    pub repelling: Vec<f64>,
    pub attracting: Vec<f64>,
}

/// A point mapped onto a parabolic point in one step.
#[derive(Clone, Debug)]
pub struct PreparabolicSite {
    pub point: CQ,
    pub point_f64: (f64, f64),
    pub target: usize,
    pub deriv: CQ,
    pub e1: f64,
    pub e2: f64,
    pub alpha2: f64,
    pub alpha1: f64,
    pub directions: Vec<f64>,
}

/// Validated scene: map, sites, regions and constants.
#[derive(Debug)]
pub struct Scene {
    pub config: SceneConfig,
    pub map: RationalMap,
    pub parabolic: Vec<ParabolicSite>,
    pub preparabolic: Vec<PreparabolicSite>,
    /// All site locations, parabolic first.
    pub sites: Vec<CQ>,
    pub u_tilde: Region,
    pub u_depth: usize,
    pub escape_radius: f64,
    pub bound: f64,
    pub c0: f64,
    pub poincare_k: f64,
    pub d_lo: f64,
    pub sep_d: f64,
    pub c_pix: u32,
    pub level_shift: u32,
    pub precision_factor: BigRational,
    pub escalations: u32,
}

/// Modified Newton iteration `z <- z - mu g/g'` for `g = r(z) - z`, with
/// `mu` the multiplicity of the root.
pub fn refine_parabolic_point(
    map: &RationalMap,
    approx: &CQ,
    multiplicity: u32,
    target_bits: u32,
) -> Result<Ball<BigFloat>, SceneError> {
    let prec = target_bits + 64;
    let ev = map.evaluator::<BigFloat>(prec);
    let mut z: Ball<BigFloat> = approx.to_ball(prec).center();
    let mu = Ball::<BigFloat>::from_i64(multiplicity as i64, prec);
    let steps = 4 * target_bits as usize;
    let tol = Mag::pow2(1 - target_bits as i64);
    for _ in 0..steps {
        let g = match ev.eval(&z) {
            Some(v) => v.sub_ref(&z).center(),
            None => return Err(SceneError::NewtonDiverged(steps)),
        };
        if g.is_exact_zero() {
            return Ok(z.center());
        }
        let dg = match ev.deriv(&z) {
            Some(v) => v.sub_ref(&Ball::one()).center(),
            None => return Err(SceneError::NewtonDiverged(steps)),
        };
        let step = match mu.mul_ref(&g).div_ref(&dg) {
            Some(s) => s.center(),
            None => return Err(SceneError::NewtonDiverged(steps)),
        };
        z = z.sub_ref(&step).center();
        let done = step.abs_hi() < tol;
        if done {
            let res = ev.eval(&z).map(|v| v.sub_ref(&z));
            if let Some(res) = res {
                if res.abs_hi() < tol {
                    let (_, hi) = ball_abs(&step);
                    let rad = hi.max_of(Mag::pow2(-(target_bits as i64)));
                    return Ok(Ball::new(z.re.clone(), z.im.clone(), rad));
                }
            }
        }
        if !z.is_finite() {
            break;
        }
    }
    Err(SceneError::NewtonDiverged(steps))
}

/// Nearest rational with a small denominator.
fn snap(x: &BigFloat) -> BigRational {
    let f = x.to_f64();
    match Ratio::<i64>::approximate_float(f) {
        Some(r) if *r.denom() <= (1 << 24) => {
            BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
        }
        _ => x.to_rational(),
    }
}

fn parse_wedge(s: &str) -> Result<f64, SceneError> {
    Ok(PI * f64_of(s, "wedge")?)
}

impl Scene {
    pub fn from_toml(s: &str) -> Result<Self, SceneError> {
        Scene::build(SceneConfig::from_toml(s)?)
    }

    pub fn build(config: SceneConfig) -> Result<Self, SceneError> {
        if config.schema != SCHEMA_VERSION {
            return Err(SceneError::Schema(format!(
                "unsupported schema version {}",
                config.schema
            )));
        }
        let num = config
            .map
            .num
            .iter()
            .map(|s| rat(s, "map.num"))
            .collect::<Result<Vec<_>, _>>()?;
        let den = config
            .map
            .den
            .iter()
            .map(|s| rat(s, "map.den"))
            .collect::<Result<Vec<_>, _>>()?;
        let map = RationalMap::new(num, den)
            .ok_or_else(|| SceneError::Schema("zero denominator".into()))?;
        let k = &config.constants;
        let c0 = f64_of(&k.c0, "c0")?;
        if !(c0 > 1.0) {
            return Err(violation(6, format!("c0 = {c0} must exceed 1")));
        }
        let poincare_k = f64_of(&k.poincare_k, "poincare_k")?;
        if !(poincare_k >= 1.0) {
            return Err(violation(6, "Poincare scale constant must be at least 1"));
        }
        let d_lo = f64_of(&k.d_lo, "d_lo")?;
        if !(d_lo > 0.0 && d_lo <= 1.0) {
            return Err(violation(7, format!("d_lo = {d_lo} must lie in (0, 1]")));
        }
        let sep_d = f64_of(&k.sep_d, "sep_d")?;
        if !(sep_d > 0.0) {
            return Err(violation(4, "separation constant must be positive"));
        }
        let bound = f64_of(&k.bound, "bound")?;
        let escape_radius = f64_of(&config.regions.escape_radius, "escape_radius")?;
        if !(bound > 0.0 && escape_radius >= bound) {
            return Err(violation(3, "escape radius must be at least the bound B"));
        }
        if k.c_pix < 4 || k.c_pix > 12 {
            return Err(violation(8, "c_pix must lie in 4..=12"));
        }
        let precision_factor = rat(&k.precision_factor, "precision_factor")?;
        if !precision_factor.is_positive() {
            return Err(SceneError::Schema("precision_factor must be positive".into()));
        }

        let mut parabolic = Vec::new();
        for (i, pc) in config.parabolic.iter().enumerate() {
            parabolic.push(Self::build_parabolic(&map, pc, i)?);
        }
        let mut preparabolic = Vec::new();
        for pc in &config.preparabolic {
            preparabolic.push(Self::build_preparabolic(&map, pc, &parabolic)?);
        }
        let mut sites: Vec<CQ> = parabolic.iter().map(|p| p.point.clone()).collect();
        sites.extend(preparabolic.iter().map(|p| p.point.clone()));

        let mut traps: Vec<Region> = parabolic
            .iter()
            .enumerate()
            .map(|(i, p)| Region::Local {
                site: i,
                shape: LocalShape::Petal(p.trap.petal.clone()),
            })
            .collect();
        for a in &config.attracting {
            let c = cq(&a.center, "attracting.center")?.to_f64();
            traps.push(Region::Disk {
                center: c,
                radius: f64_of(&a.radius, "attracting.radius")?,
            });
        }
        let u_tilde = Region::And(vec![
            Region::Disk {
                center: (0.0, 0.0),
                radius: escape_radius,
            },
            Region::Not(Box::new(Region::Or(traps))),
        ]);
        let scene = Scene {
            map,
            parabolic,
            preparabolic,
            sites,
            u_tilde,
            u_depth: config.regions.u_depth,
            escape_radius,
            bound,
            c0,
            poincare_k,
            d_lo,
            sep_d,
            c_pix: k.c_pix,
            level_shift: k.level_shift,
            precision_factor,
            escalations: k.escalations,
            config,
        };
        scene.check_critical_orbits()?;
        Ok(scene)
    }

    /// Every critical orbit must leave `U` within `u_depth` steps.
    fn check_critical_orbits(&self) -> Result<(), SceneError> {
        let oracle = crate::oracle::Oracle::<f64>::new(self, 53);
        for c in self.critical_points()? {
            let v = oracle.classify(&c.to_ball(53), self.u_depth as u64);
            if !v.is_conclusive() {
                let (x, y) = c.to_f64();
                return Err(violation(
                    3,
                    format!("critical point ({x}, {y}) not trapped within {} steps", self.u_depth as u64),
                ));
            }
        }
        Ok(())
    }

    fn build_parabolic(
        map: &RationalMap,
        pc: &ParabolicConfig,
        idx: usize,
    ) -> Result<ParabolicSite, SceneError> {
        if pc.period != 1 {
            return Err(violation(1, "only period-one parabolic points are supported"));
        }
        let approx = cq(&pc.approx, "parabolic.approx")?;
        let refined = refine_parabolic_point(map, &approx, pc.degeneracy + 1, 96)?;
        let point = CQ::new(snap(&refined.re), snap(&refined.im));
        if !point.im.is_zero() {
            return Err(violation(2, "parabolic point must be real"));
        }
        match map.eval_exact(&point) {
            Some(v) if v == point => {}
            _ => return Err(violation(2, format!("point {idx} is not a fixed point"))),
        }
        if map.deriv_exact(&point) != Some(CQ::one()) {
            return Err(violation(1, format!("multiplier at point {idx} is not 1")));
        }
        let (gn, gd) = map.germ_at(&point.re);
        let germ = ParabolicGerm::from_rational(&gn, &gd)
            .map_err(|e| violation(2, format!("germ: {e}")))?;
        let r = germ.degeneracy() as u32;
        if r != pc.degeneracy {
            return Err(violation(
                2,
                format!("configured degeneracy {} but germ has {r}", pc.degeneracy),
            ));
        }
        let a = germ.series().coeff(r as usize + 1).to_f64().unwrap_or(0.0);
        let fraction = f64_of(&pc.angle_fraction, "angle_fraction")?;
        if !(fraction > 0.5 && fraction < 1.0) {
            return Err(violation(5, "angle_fraction must lie in (1/2, 1)"));
        }
        let trap = build_trap_region(
            r,
            (a, 0.0),
            &GermF64::new(&gn, &gd),
            fraction,
            pc.petal_apex,
        )?;
        if pc.e2_exp >= pc.e1_exp {
            return Err(violation(4, "E1 must be strictly inside E2"));
        }
        let e1 = (-(pc.e1_exp as f64)).exp2();
        let e2 = (-(pc.e2_exp as f64)).exp2();
        if e2 >= trap.petal.outer_radius().max(1.0) {
            return Err(violation(4, "E2 is too large"));
        }
        let alpha2 = parse_wedge(&pc.wedge)?;
        if !(alpha2 > 0.0 && alpha2 < trap.petal.eps / r as f64) {
            return Err(violation(5, "A2 half-angle must be below the petal notch"));
        }
        Ok(ParabolicSite {
            point_f64: point.to_f64(),
            point,
            r,
            germ: Arc::new(germ),
            a: (a, 0.0),
            repelling: trap.petal.repelling_directions(),
            attracting: trap.petal.attracting_directions(),
            trap,
            e1,
            e2,
            e1_exp: pc.e1_exp,
            e2_exp: pc.e2_exp,
            alpha2,
            alpha1: alpha2 / 2.0,
        })
    }

    fn build_preparabolic(
        map: &RationalMap,
        pc: &PreparabolicConfig,
        parabolic: &[ParabolicSite],
    ) -> Result<PreparabolicSite, SceneError> {
        let point = cq(&pc.point, "preparabolic.point")?;
        let target = parabolic
            .get(pc.target)
            .ok_or_else(|| SceneError::Schema("preparabolic target out of range".into()))?;
        if map.eval_exact(&point) != Some(target.point.clone()) {
            return Err(violation(4, "preparabolic point does not land on its target"));
        }
        if point == target.point {
            return Err(violation(4, "preparabolic point equals its target"));
        }
        let deriv = map
            .deriv_exact(&point)
            .ok_or_else(|| violation(7, "pole at preparabolic point"))?;
        if deriv.is_zero() {
            return Err(violation(7, "critical preparabolic point"));
        }
        let (dx, dy) = deriv.to_f64();
        let rot = dy.atan2(dx);
        let directions = target
            .repelling
            .iter()
            .map(|t| crate::geometry::region::wrap_angle(t - rot))
            .collect();
        if pc.e2_exp >= pc.e1_exp {
            return Err(violation(4, "E1 must be strictly inside E2"));
        }
        let e1 = (-(pc.e1_exp as f64)).exp2();
        let e2 = (-(pc.e2_exp as f64)).exp2();
        if e2 * dx.hypot(dy) * 1.01 >= target.e2 {
            return Err(violation(4, "image of the preparabolic E2 must lie in E2"));
        }
        let alpha2 = parse_wedge(&pc.wedge)?;
        Ok(PreparabolicSite {
            point_f64: point.to_f64(),
            point,
            target: pc.target,
            deriv,
            e1,
            e2,
            alpha2,
            alpha1: alpha2 / 2.0,
            directions,
        })
    }

    /// `U = r^{-u}(U~)`.
    pub fn region_u(&self) -> Region {
        Region::Preimage {
            depth: self.u_depth,
            inner: Box::new(self.u_tilde.clone()),
        }
    }

    /// `V = r^{-1}(U)`.
    pub fn region_v(&self) -> Region {
        Region::Preimage {
            depth: self.u_depth + 1,
            inner: Box::new(self.u_tilde.clone()),
        }
    }

    /// Site index of the `i`-th preparabolic point.
    pub fn pre_site(&self, i: usize) -> usize {
        self.parabolic.len() + i
    }

    pub fn e1_region(&self) -> Region {
        let mut v = Vec::new();
        for (i, p) in self.parabolic.iter().enumerate() {
            v.push(Region::Local {
                site: i,
                shape: LocalShape::Disk { radius: p.e1 },
            });
        }
        for (i, p) in self.preparabolic.iter().enumerate() {
            v.push(Region::Local {
                site: self.pre_site(i),
                shape: LocalShape::Disk { radius: p.e1 },
            });
        }
        Region::Or(v)
    }

    pub fn a2_region(&self) -> Region {
        let mut v = Vec::new();
        for (i, p) in self.parabolic.iter().enumerate() {
            v.push(Region::Local {
                site: i,
                shape: LocalShape::Wedge {
                    dirs: p.repelling.clone(),
                    half_angle: p.alpha2,
                },
            });
        }
        for (i, p) in self.preparabolic.iter().enumerate() {
            v.push(Region::Local {
                site: self.pre_site(i),
                shape: LocalShape::Wedge {
                    dirs: p.directions.clone(),
                    half_angle: p.alpha2,
                },
            });
        }
        Region::Or(v)
    }

    /// Parsed critical points.
    pub fn critical_points(&self) -> Result<Vec<CQ>, SceneError> {
        self.config
            .critical_points
            .iter()
            .map(|c| cq(c, "critical_points"))
            .collect()
    }

    /// Site locations as balls of scalar type `T`.
    pub fn site_balls<T: Real>(&self, prec: u32) -> Vec<Ball<T>> {
        self.sites.iter().map(|p| p.to_ball(prec)).collect()
    }

    pub fn has_parabolic(&self) -> bool {
        !self.parabolic.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    const CAULI: &str = r#"
schema = 1
name = "test"
[map]
num = ["1/4", "0", "1"]
[[parabolic]]
approx = ["0.49", "0"]
degeneracy = 1
petal_apex = 48
e1_exp = 10
e2_exp = 9
wedge = "1/128"
[[preparabolic]]
point = ["-1/2", "0"]
target = 0
e1_exp = 11
e2_exp = 10
wedge = "1/128"
[regions]
u_depth = 56
escape_radius = "2"
[constants]
c0 = "1.05"
poincare_k = "16"
d_lo = "1/16"
sep_d = "1/1024"
bound = "2"
c_pix = 8
"#;

    #[test]
    fn cauliflower_loads() {
        let s = Scene::from_toml(CAULI).unwrap();
        let p = &s.parabolic[0];
        assert_eq!(p.point, CQ::real(BigRational::new(1.into(), 2.into())));
        assert_eq!(p.r, 1);
        assert_eq!(p.germ.degeneracy(), 1);
        assert!(p.repelling[0].abs() < 1e-12);
        assert_eq!(s.preparabolic[0].directions.len(), 1);
    }

    #[test]
    fn c0_at_most_one_is_rejected() {
        let bad = CAULI.replace("c0 = \"1.05\"", "c0 = \"1\"");
        match Scene::from_toml(&bad) {
            Err(SceneError::InvariantViolation { item, .. }) => assert_eq!(item, 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn newton_finds_milnor_point() {
        let m = RationalMap::polynomial(vec![
            BigRational::zero(),
            BigRational::one(),
            BigRational::zero(),
            BigRational::zero(),
            BigRational::one(),
        ]);
        let q = CQ::real(BigRational::new(1.into(), 100.into()));
        let b = refine_parabolic_point(&m, &q, 4, 64).unwrap();
        assert!(b.abs_hi().to_f64() < 1e-15);
    }

    #[test]
    fn newton_exact_start() {
        let m = RationalMap::polynomial(vec![
            BigRational::new(1.into(), 4.into()),
            BigRational::zero(),
            BigRational::one(),
        ]);
        let q = CQ::real(BigRational::new(1.into(), 2.into()));
        let b = refine_parabolic_point(&m, &q, 2, 64).unwrap();
        assert!(b.contains_exact(&q.re, &q.im));
    }
}
