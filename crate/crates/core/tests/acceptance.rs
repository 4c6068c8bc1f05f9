//! Acceptance criteria, one test per criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use parabolic_julia::arith::Radius;
use parabolic_julia::geometry::edt::squared_distance_transform;
use parabolic_julia::geometry::CQ;
use parabolic_julia::longiter::{long_iterate, naive_iterate, LongIterError, ParabolicGerm};
use parabolic_julia::oracle::{
    certified_picture, compare_pictures, milnor_escape_count, milnor_law, naive_escape_count,
    oracle_picture, Oracle, VerdictKind,
};
use parabolic_julia::pixel::{compute_N, dyadic, Exit, PixelEngine, Value};
use parabolic_julia::render::{
    load_scene, render_grid, render_grid_at, repelling_axis_point, LoadedScene, Pixel, Viewport,
};
use parabolic_julia::series::{build_table, eval_coeff, iterate_coeff_table, PowerSums, TruncatedSeries};
use parabolic_julia::{Ball, Ball64, BallMp, BigFloat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

fn report(n: u32, pass: bool, detail: String) {
    let line = format!("criterion {n}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    std::io::stderr().lock().write_all(line.as_bytes()).ok();
    assert!(pass, "criterion {n} failed: {detail}");
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn scene(name: &str) -> &'static LoadedScene {
    static CAULI: OnceLock<LoadedScene> = OnceLock::new();
    static MILNOR: OnceLock<LoadedScene> = OnceLock::new();
    let cell = match name {
        "cauliflower" => &CAULI,
        _ => &MILNOR,
    };
    cell.get_or_init(|| load_scene(Path::new(name)).expect("shipped scene loads"))
}

#[test]
fn criterion_1_closed_form_coefficients() {
    let t0 = Instant::now();
    let f = TruncatedSeries::new(vec![q(1); 20]);
    let table = iterate_coeff_table(&f, 20, 512).unwrap();
    let mut worst = f64::NEG_INFINITY;
    let mut bad = 0;
    for n in [1i64, 10, 1000, 1_000_000] {
        for k in 2..=20usize {
            let v = eval_coeff(&table, k, &BigInt::from(n), 1024).unwrap();
            let expect = BigRational::from_integer(BigInt::from(n).pow(k as u32 - 1));
            let r = v.radius().log2();
            worst = worst.max(r);
            if !v.contains_exact(&expect, &BigRational::zero()) || r > -53.0 {
                bad += 1;
            }
        }
    }
    let el = t0.elapsed();
    report(
        1,
        bad == 0 && el < Duration::from_secs(10),
        format!("{bad} mismatches, worst radius 2^{worst:.1}, {:.2}s", el.as_secs_f64()),
    );
}

#[test]
fn criterion_2_growth_bound() {
    let sums = PowerSums::new(16);
    let mut violations = 0;
    let mut checked = 0;
    let mut tightest: f64 = 0.0;
    for r in 1..=3usize {
        let mut c = vec![q(0); 20];
        c[0] = q(1);
        for x in c.iter_mut().skip(r) {
            *x = q(1);
        }
        let f = TruncatedSeries::new(c);
        let t = build_table(&f, 16, 0, &sums).unwrap();
        let alpha = 2 * (r as i64).pow(3);
        for n in 1..=1000i64 {
            for k in 1..=15usize {
                let a = t.eval_coeff_with(k + 1, &q(n)).unwrap().abs();
                let lhs = a.to_f64().unwrap();
                let rhs = ((alpha * n) as f64).powf(k as f64 / r as f64);
                checked += 1;
                if lhs > rhs * (1.0 + 1e-12) {
                    violations += 1;
                }
                if lhs > 0.0 {
                    tightest = tightest.max(lhs / rhs);
                }
            }
        }
    }
    report(
        2,
        violations == 0,
        format!("{violations} violations in {checked} coefficients, max ratio {tightest:.3e}"),
    );
}

fn mp(re: &BigRational, im: &BigRational, prec: u32) -> BallMp {
    Ball::from_rational(re, im, prec)
}

fn overlaps(a: &BallMp, b: &BallMp) -> bool {
    a.sub_ref(b).contains_zero()
}

#[test]
fn criterion_3_long_iteration_agreement() {
    let t0 = Instant::now();
    let cases: [(Vec<BigRational>, std::ops::RangeInclusive<u32>); 2] =
        [(vec![q(1), q(1)], 4..=10), (vec![q(1), q(0), q(0), q(1)], 2..=6)];
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut rejected = Vec::new();
    for (coeffs, ms) in cases {
        let germ = ParabolicGerm::from_polynomial(coeffs).unwrap();
        let r = germ.degeneracy();
        for m_exp in ms {
            let ell = germ.ell(m_exp);
            let scale = BigRational::new(BigInt::one(), BigInt::one() << (m_exp as usize + 1));
            for (re, im) in [(q(1), q(0)), (BigRational::new(3.into(), 4.into()), BigRational::new(1.into(), 2.into()))] {
                let (re, im) = (&re * &scale, &im * &scale);
                let z = mp(&re, &im, 128);
                match long_iterate(&germ, &z, m_exp, 53) {
                    Err(LongIterError::IterationTooShort) => {
                        // m^r < C: the iterate count is zero.
                        if !ell.is_zero() {
                            bad.push(format!("r={r} m=2^{m_exp}: rejected with l = {ell}"));
                        }
                        rejected.push(format!("r={r} m=2^{m_exp}"));
                        continue;
                    }
                    Err(e) => {
                        bad.push(format!("r={r} m=2^{m_exp}: {e}"));
                        continue;
                    }
                    Ok((w, dw)) => {
                        checked += 1;
                        let l = ell.to_u64().unwrap();
                        let z512 = mp(&re, &im, 512);
                        let (wn, dn) = naive_iterate(&germ, &z512, l);
                        if !overlaps(&w, &wn) || !overlaps(&dw, &dn) {
                            bad.push(format!("r={r} m=2^{m_exp}: value or derivative disagrees"));
                        }
                        if w.radius().log2() > -50.0 {
                            bad.push(format!("r={r} m=2^{m_exp}: radius 2^{:.1}", w.radius().log2()));
                        }
                        if im.is_zero() {
                            // h = |z| 2^{-s/2}
                            let h = &re * BigRational::new(1.into(), BigInt::one() << 26);
                            let (wp, _) = naive_iterate(&germ, &mp(&(&re + &h), &im, 512), l);
                            let (wm, _) = naive_iterate(&germ, &mp(&(&re - &h), &im, 512), l);
                            let fd = wp.sub_ref(&wm).center_f64().0 / (2.0 * h.to_f64().unwrap());
                            let d = dw.center_f64().0;
                            if ((fd - d) / d).abs() > (-13.0f64).exp2() {
                                bad.push(format!("r={r} m=2^{m_exp}: finite difference {fd} vs {d}"));
                            }
                        }
                    }
                }
            }
        }
    }
    let el = t0.elapsed();
    report(
        3,
        bad.is_empty() && el < Duration::from_secs(60),
        format!(
            "{checked} agreements, {} failures {:?}; rejected by m^r < C (l = 0): {:?}; {:.2}s",
            bad.len(),
            bad,
            rejected,
            el.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_4_picture_band() {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["cauliflower", "milnor4"] {
        let ls = scene(name);
        let eng = ls.engine();
        for n in [6u32, 8] {
            let vp = Viewport::square(n, 1);
            let orc = oracle_picture(&ls.scene, &vp);
            let img = render_grid(&eng, &vp, 0);
            let r = compare_pictures(&img.drawn_mask(), &vp, &orc, &vp, n).unwrap();
            let failed = img.count(Pixel::Failed);
            ok &= r.holds() && failed == 0;
            lines.push(format!(
                "{name} n={n}: out-of-band {}+{}, failed {failed}, hausdorff {:.4}",
                r.a_outside, r.b_outside, r.hausdorff
            ));
        }
    }
    report(4, ok, lines.join("; "));
}

#[test]
fn criterion_5_soundness_vs_oracle() {
    let t0 = Instant::now();
    let ls = scene("cauliflower");
    let eng = ls.engine();
    let n = 10u32;
    let vp = Viewport::square(n, 1);
    let (w, h) = (vp.width, vp.height);
    let pitch = vp.pitch();

    let decided: Vec<Option<Value>> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (ci, cj) = vp.index(i % w, i / w);
            eng.decide_dyadic(ci, cj, n, n).ok().map(|d| d.value)
        })
        .collect();
    let failed = decided.iter().filter(|d| d.is_none()).count();

    // Cells certified in the Fatou set; the rest cover J.
    let budget = 1u64 << 16;
    let kept = certified_picture(&ls.scene, &vp, budget);
    let d2 = squared_distance_transform(&kept, w, h);
    let half_diag = pitch * std::f64::consts::FRAC_1_SQRT_2;
    let far = 256.0 * pitch;

    let oracle = Oracle::<f64>::new(&ls.scene, 53);
    let kind = |x: f64, y: f64| match oracle.classify(&Ball64::new(x, y, 0.0), budget).kind {
        VerdictKind::Escaped(_) => 1u8,
        VerdictKind::Converged(..) => 2u8,
        VerdictKind::Undecided => 0u8,
    };
    let (one_bad, zero_bad): (usize, usize) = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let dist = if d2[i] == u32::MAX {
                f64::INFINITY
            } else {
                (d2[i] as f64).sqrt() * pitch - half_diag
            };
            match decided[i] {
                // d(z, J) >= dist > 256 2^-n contradicts One.
                Some(Value::One) if dist > far => (1, 0),
                // Opposite verdicts within 2^-n of z put J within 2^-n.
                // Where dist >= 2^-n no such pair exists.
                Some(Value::Zero) if dist < pitch => {
                    let (x, y) = vp.center_f64(i % w, i / w);
                    let o = 0.5 * pitch;
                    let ks: Vec<u8> = [(0.0, 0.0), (-o, -o), (o, -o), (-o, o), (o, o)]
                        .iter()
                        .map(|(dx, dy)| kind(x + dx, y + dy))
                        .collect();
                    let mixed = ks.contains(&1) && ks.contains(&2);
                    (0, mixed as usize)
                }
                _ => (0, 0),
            }
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let el = t0.elapsed();
    report(
        5,
        one_bad == 0 && zero_bad == 0 && failed == 0,
        format!(
            "{}x{} grid: {one_bad} One and {zero_bad} Zero contradictions, {failed} failed, {:.1}s",
            w,
            h,
            el.as_secs_f64()
        ),
    );
}

fn median_time(eng: &PixelEngine<'_>, z: &CQ, n: u32) -> f64 {
    let mut ts: Vec<f64> = (0..5)
        .map(|_| {
            let t = Instant::now();
            eng.decide(z, n).expect("decides");
            t.elapsed().as_secs_f64()
        })
        .collect();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts[2]
}

#[test]
fn criterion_6_parabolic_speedup() {
    let ls = scene("cauliflower");
    let eng = ls.engine();
    let counts: Vec<f64> = (12..=20u32)
        .map(|n| naive_escape_count(&ls.scene, &repelling_axis_point(n), 2.0, 1 << 26).unwrap() as f64)
        .collect();
    let ratios: Vec<f64> = counts.windows(2).map(|p| p[1] / p[0]).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let naive_ok = (1.8..=2.2).contains(&mean);

    for n in [12u32, 20, 28] {
        let _ = eng.decide(&repelling_axis_point(n), n);
    }
    let times: Vec<(u32, f64)> = (12..=28u32)
        .map(|n| (n, median_time(&eng, &repelling_axis_point(n), n)))
        .collect();
    let t = |n: u32| times.iter().find(|(m, _)| *m == n).unwrap().1;
    let worst = (12..=14u32).map(|n| t(2 * n) / t(n)).fold(0.0, f64::max);
    report(
        6,
        naive_ok && worst <= 64.0,
        format!(
            "naive doubling ratio {mean:.3}; worst time(2n)/time(n) {worst:.2}; time(12) {:.2}ms, time(28) {:.2}ms",
            t(12) * 1e3,
            t(28) * 1e3
        ),
    );
}

#[test]
fn criterion_7_milnor_benchmark() {
    let mut lines = Vec::new();
    let mut ok = true;
    let slow = std::env::var_os("PJULIA_SLOW").is_some();
    let mut eps = vec![2u32];
    if slow {
        eps.push(3);
    }
    for e in eps {
        let t = Instant::now();
        let epsilon = BigRational::new(1.into(), BigInt::from(10).pow(e));
        let c = milnor_escape_count(&epsilon).unwrap();
        let law = milnor_law(10f64.powi(-(e as i32)));
        let rel_lo = (c.lo as f64 - law).abs() / law;
        let rel_hi = (c.hi as f64 - law).abs() / law;
        ok &= rel_lo <= 0.1 && rel_hi <= 0.1;
        lines.push(format!(
            "eps=1e-{e}: count [{}, {}], 1/(3 eps^3) = {law:.4e}, constant {:.4}, {:.1}s",
            c.lo,
            c.hi,
            c.lo as f64 * 10f64.powi(-3 * e as i32),
            t.elapsed().as_secs_f64()
        ));
    }
    if !slow {
        lines.push("eps=1e-3 skipped (set PJULIA_SLOW=1)".into());
    }
    report(7, ok, lines.join("; "));
}

#[test]
fn criterion_8_step_budgets() {
    let n = 16u32;
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["cauliflower", "milnor4"] {
        let ls = scene(name);
        let eng = ls.engine();
        let nb = compute_N(n, ls.scene.c0, ls.scene.poincare_k);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let span = 2i64 << n;
        // Half uniform in [-2, 2]^2, half near drawn coarse cells.
        let drawn: Vec<usize> = (0..ls.coarse.marked.len()).filter(|&i| ls.coarse.marked[i]).collect();
        let cvp = ls.coarse.viewport;
        let pts: Vec<(i64, i64)> = (0..1000)
            .map(|k| {
                if k % 2 == 0 {
                    (rng.random_range(-span..=span), rng.random_range(-span..=span))
                } else {
                    let c = drawn[rng.random_range(0..drawn.len())];
                    let (x, y) = cvp.center_f64(c % cvp.width, c / cvp.width);
                    let s = (n as f64).exp2();
                    let jit = 1i64 << (n - cvp.n);
                    (
                        (x * s) as i64 + rng.random_range(-jit..=jit),
                        (y * s) as i64 + rng.random_range(-jit..=jit),
                    )
                }
            })
            .collect();
        let mut max_step7 = 0;
        let mut max_iter = 0;
        let mut failed = 0;
        let mut capped = 0;
        for (i, j) in pts {
            match eng.decide_dyadic(i, j, n, n) {
                Ok(d) => {
                    let c = d.certificate.counts;
                    max_step7 = max_step7.max(c.step7);
                    max_iter = max_iter.max(c.iterations);
                    capped += (d.certificate.exit == Exit::Cap) as usize;
                }
                Err(_) => failed += 1,
            }
        }
        let kappa = max_iter as f64 / (n * n) as f64;
        ok &= max_step7 <= nb + 1 && failed == 0 && capped == 0;
        lines.push(format!(
            "{name}: max step7 {max_step7} (N+1 = {}), max iterations {max_iter}, kappa {kappa:.3}, failed {failed}, capped {capped}",
            nb + 1
        ));
    }
    report(8, ok, lines.join("; "));
}

fn rand_q(rng: &mut ChaCha8Rng) -> BigRational {
    let num: i64 = rng.random_range(-(1i64 << 40)..=(1i64 << 40));
    let den: i64 = rng.random_range(1..=(1i64 << 30));
    BigRational::new(num.into(), den.into())
}

fn exact_op(op: u8, a: &(BigRational, BigRational), b: &(BigRational, BigRational)) -> Option<(BigRational, BigRational)> {
    let (ar, ai) = a;
    let (br, bi) = b;
    Some(match op {
        0 => (ar + br, ai + bi),
        1 => (ar - br, ai - bi),
        2 => (ar * br - ai * bi, ar * bi + ai * br),
        _ => {
            let d = br * br + bi * bi;
            if d.is_zero() {
                return None;
            }
            ((ar * br + ai * bi) / &d, (ai * br - ar * bi) / &d)
        }
    })
}

fn ball_op<T: parabolic_julia::arith::Real>(op: u8, a: &Ball<T>, b: &Ball<T>) -> Option<Ball<T>> {
    match op {
        0 => Some(a.add_ref(b)),
        1 => Some(a.sub_ref(b)),
        2 => Some(a.mul_ref(b)),
        _ => a.div_ref(b),
    }
}

#[test]
fn criterion_9_determinism_and_ball_soundness() {
    let ls = scene("cauliflower");
    let eng = ls.engine();
    let vp = Viewport::around(7, 0.0, 0.0, 256, 256);
    let a = render_grid_at(&eng, &vp, 11, 1).pgm_bytes();
    let b = render_grid_at(&eng, &vp, 11, 1).pgm_bytes();
    let c = render_grid_at(&eng, &vp, 11, 4).pgm_bytes();
    let d = render_grid_at(&eng, &vp, 11, 16).pgm_bytes();
    let same = a == b && a == c && a == d;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0;
    let samples = 10_000;
    for k in 0..samples {
        let x = (rand_q(&mut rng), rand_q(&mut rng));
        let y = (rand_q(&mut rng), rand_q(&mut rng));
        let op = (k % 4) as u8;
        let Some(e) = exact_op(op, &x, &y) else { continue };
        let ok = if k % 2 == 0 {
            let (bx, by) = (Ball64::from_rational(&x.0, &x.1, 53), Ball64::from_rational(&y.0, &y.1, 53));
            ball_op(op, &bx, &by).is_none_or(|r| r.contains_exact(&e.0, &e.1))
        } else {
            let prec = 64 + (k as u32 % 5) * 48;
            let (bx, by) = (
                Ball::<BigFloat>::from_rational(&x.0, &x.1, prec),
                Ball::<BigFloat>::from_rational(&y.0, &y.1, prec),
            );
            ball_op(op, &bx, &by).is_none_or(|r| r.contains_exact(&e.0, &e.1))
        };
        violations += (!ok) as usize;
    }
    report(
        9,
        same && violations == 0,
        format!(
            "renders identical across runs and workers {{1, 4, 16}}: {same}; {violations} containment violations in {samples} samples"
        ),
    );
}

#[test]
fn decide_examples() {
    let ls = scene("cauliflower");
    let eng = ls.engine();
    let far = eng.decide(&CQ::real(q(10)), 10).unwrap();
    assert_eq!(far.value, Value::Zero);
    let fixed = eng.decide(&CQ::real(BigRational::new(1.into(), 2.into())), 10).unwrap();
    assert_eq!(fixed.value, Value::One);
    let pre = eng.decide(&dyadic(-1, 0, 1), 10).unwrap();
    assert_eq!(pre.value, Value::One);
    let axis = eng.decide(&repelling_axis_point(20), 20).unwrap();
    assert_eq!(axis.value, Value::One);
    assert!(axis.certificate.counts.map_steps > 1 << 19);
    assert!(axis.certificate.counts.iterations < 2000);
}
