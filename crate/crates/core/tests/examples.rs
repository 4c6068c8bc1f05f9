use num_bigint::BigUint;
use num_rational::BigRational;
use parabolic_julia::arith::{Mag, Radius};
use parabolic_julia::geometry::{Scene, CQ};
use parabolic_julia::longiter::{long_iterate, ParabolicGerm};
use parabolic_julia::oracle::{naive_classify, naive_escape_count, VerdictKind};
use parabolic_julia::pixel::decide_point;
use parabolic_julia::render::{builtin_scene, load_scene, render_grid_at, repelling_axis_point, Pixel, Viewport};
use parabolic_julia::{Ball, Ball64, BallMp};
use std::path::Path;

fn q(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn scene(name: &str) -> Scene {
    Scene::from_toml(builtin_scene(name).unwrap()).unwrap()
}

#[test]
fn naive_classify_examples() {
    let s = scene("cauliflower");
    let v = naive_classify(&Ball64::new(10.0, 0.0, 0.0), &s, 100, 2.0);
    assert!(matches!(v.kind, VerdictKind::Escaped(k) if k <= 5));
    let v = naive_classify(&Ball64::new(0.5, 0.0, 0.0), &s, 1 << 16, 2.0);
    assert_eq!(v.kind, VerdictKind::Undecided);
    let m = scene("milnor4");
    let v = naive_classify(&Ball64::new(0.0, 0.0, 0.0), &m, 1 << 12, 2.0);
    assert_eq!(v.kind, VerdictKind::Undecided);
    let v = naive_classify(&Ball64::new(-0.05, 0.0, 0.0), &m, 1 << 12, 2.0);
    assert!(matches!(v.kind, VerdictKind::Converged(_, 0)), "{:?}", v.kind);
}

#[test]
fn milnor_scene_germ() {
    let m = scene("milnor4");
    let p = &m.parabolic[0];
    assert_eq!(p.r, 3);
    assert_eq!(p.repelling.len(), 3);
    assert_eq!(p.point, CQ::real(q(0)));
}

#[test]
fn naive_count_is_order_two_to_the_n() {
    let s = scene("cauliflower");
    let c = naive_escape_count(&s, &repelling_axis_point(10), 2.0, 1 << 16).unwrap();
    assert!((1 << 9..=1 << 12).contains(&c), "{c}");
    let mut prev = u64::MAX;
    for n in (8..=14).rev() {
        let c = naive_escape_count(&s, &repelling_axis_point(n), 2.0, 1 << 20).unwrap();
        assert!(c <= prev || prev == u64::MAX);
        prev = c;
    }
}

#[test]
fn far_viewport_is_blank() {
    let ls = load_scene(Path::new("cauliflower")).unwrap();
    let vp = Viewport::around(8, 3.0, 3.0, 32, 32);
    let img = render_grid_at(&ls.engine(), &vp, 8, 1);
    assert_eq!(img.count(Pixel::Zero), 32 * 32);
}

#[test]
fn decide_point_far_and_near() {
    let ls = load_scene(Path::new("cauliflower")).unwrap();
    let d = decide_point(&CQ::real(q(10)), 10, &ls.scene, &ls.coarse).unwrap();
    assert_eq!(d.value, parabolic_julia::pixel::Value::Zero);
}

#[test]
fn tail_bound_example() {
    let g = ParabolicGerm::from_polynomial(vec![q(1), q(1)]).unwrap();
    let ell = BigUint::from(64u32);
    let zhi = Mag::pow2(-10);
    for k in [10usize, 20, 40] {
        assert!(g.tail_bound(k, &ell, zhi) <= Mag::pow2(-(k as i64)));
    }
}

#[test]
fn repelling_axis_grows() {
    for coeffs in [vec![q(1), q(1)], vec![q(1), q(0), q(0), q(1)]] {
        let g = ParabolicGerm::from_polynomial(coeffs).unwrap();
        for m_exp in 4..=10u32 {
            let z: Ball64 = Ball::new((-(m_exp as f64) - 1.5).exp2(), 0.0, 0.0);
            if let Ok((w, _)) = long_iterate(&g, &z, m_exp, 40) {
                assert!(w.center_f64().0 > z.center_f64().0);
            }
        }
    }
}

#[test]
fn two_blocks_match_one_continuation() {
    let g = ParabolicGerm::from_polynomial(vec![q(1), q(1)]).unwrap();
    let z: BallMp = Ball::from_real_rational(&BigRational::new(1.into(), 4096.into()), 256);
    let (w1, d1) = long_iterate(&g, &z, 10, 80).unwrap();
    let (w2, d2) = long_iterate(&g, &w1, 10, 80).unwrap();
    let l = g.ell(10);
    let (w, d) = parabolic_julia::longiter::iterate_exact(&g, &z, &(&l + &l), 80).unwrap();
    assert!(w2.sub_ref(&w).contains_zero());
    assert!(d2.mul_ref(&d1).sub_ref(&d).contains_zero());
}
