use num_rational::BigRational;
use parabolic_julia::{Ball, Ball64, BallMp};
use proptest::prelude::*;

fn rat() -> impl Strategy<Value = BigRational> {
    (-(1i64 << 40)..(1i64 << 40), 1i64..(1i64 << 30)).prop_map(|(n, d)| BigRational::new(n.into(), d.into()))
}

fn cplx() -> impl Strategy<Value = (BigRational, BigRational)> {
    (rat(), rat())
}

fn mul(a: &(BigRational, BigRational), b: &(BigRational, BigRational)) -> (BigRational, BigRational) {
    (&a.0 * &b.0 - &a.1 * &b.1, &a.0 * &b.1 + &a.1 * &b.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn f64_products_contain_truth(a in cplx(), b in cplx()) {
        let x = Ball64::from_rational(&a.0, &a.1, 53);
        let y = Ball64::from_rational(&b.0, &b.1, 53);
        let p = mul(&a, &b);
        prop_assert!(x.mul_ref(&y).contains_exact(&p.0, &p.1));
        let s = (&a.0 + &b.0, &a.1 + &b.1);
        prop_assert!(x.add_ref(&y).contains_exact(&s.0, &s.1));
    }

    #[test]
    fn mp_powers_contain_truth(a in cplx(), k in 0u32..6, prec in 60u32..300) {
        let x: BallMp = Ball::from_rational(&a.0, &a.1, prec);
        let mut e = (BigRational::from_integer(1.into()), BigRational::from_integer(0.into()));
        for _ in 0..k {
            e = mul(&e, &a);
        }
        prop_assert!(x.powu(k).contains_exact(&e.0, &e.1));
    }

    #[test]
    fn quotients_contain_truth(a in cplx(), b in cplx()) {
        let d = &b.0 * &b.0 + &b.1 * &b.1;
        prop_assume!(d != BigRational::from_integer(0.into()));
        let x = Ball64::from_rational(&a.0, &a.1, 53);
        let y = Ball64::from_rational(&b.0, &b.1, 53);
        let e = ((&a.0 * &b.0 + &a.1 * &b.1) / &d, (&a.1 * &b.0 - &a.0 * &b.1) / &d);
        if let Some(r) = x.div_ref(&y) {
            prop_assert!(r.contains_exact(&e.0, &e.1));
        }
    }
}
