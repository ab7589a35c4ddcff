use geodequiv::dsl::parse_with_names;
use geodequiv::dual::{Jet, Scalar};
use proptest::prelude::*;

const NAMES: [&str; 2] = ["x1", "x2"];

fn expression() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x1".to_string()),
        Just("x2".to_string()),
        (0.5f64..2.0).prop_map(|c| format!("{c:.3}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(0.3*sin({a}))")),
            inner.clone().prop_map(|a| format!("({a})^2")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("1/(2 + cos({a}))")),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gradient_matches_central_differences(src in expression(), x in point()) {
        let e = parse_with_names(&src, &NAMES).unwrap();
        let d = e.eval2(&x).unwrap();
        prop_assert!((d.value - e.eval_f64(&x).unwrap()).abs() <= 1e-14 * (1.0 + d.value.abs()));
        let h = 1e-5;
        for i in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (e.eval_f64(&xp).unwrap() - e.eval_f64(&xm).unwrap()) / (2.0 * h);
            prop_assert!((fd - d.grad[i]).abs() <= 1e-6 * (1.0 + d.grad[i].abs()), "{src}: {fd} vs {}", d.grad[i]);
        }
    }

    #[test]
    fn hessian_matches_differenced_gradient(src in expression(), x in point()) {
        let e = parse_with_names(&src, &NAMES).unwrap();
        let d = e.eval2(&x).unwrap();
        let grad = |y: &[f64]| e.eval(&Jet::seed(y, 0, 2)).unwrap().gradient(2);
        let h = 1e-5;
        for j in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let (gp, gm) = (grad(&xp), grad(&xm));
            for i in 0..2 {
                let fd = (gp[i] - gm[i]) / (2.0 * h);
                let exact = d.hess_at(i, j);
                prop_assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "{src}: {fd} vs {exact}");
            }
        }
        prop_assert_eq!(d.hess_at(0, 1), d.hess_at(1, 0));
    }

    #[test]
    fn display_round_trips(src in expression(), x in point()) {
        let e = parse_with_names(&src, &NAMES).unwrap();
        let again = parse_with_names(&e.to_string(), &NAMES).unwrap();
        let (a, b) = (e.eval_f64(&x).unwrap(), again.eval_f64(&x).unwrap());
        prop_assert!((a - b).abs() <= 1e-14 * (1.0 + a.abs()));
    }

    #[test]
    fn jet_and_dual_agree(src in expression(), x in point()) {
        let e = parse_with_names(&src, &NAMES).unwrap();
        let j = e.eval(&Jet::seed(&x, 0, 2)).unwrap();
        let d = e.eval2(&x).unwrap();
        prop_assert_eq!(j.value(), d.value);
        for i in 0..2 {
            prop_assert!((j.partial(i) - d.grad[i]).abs() <= 1e-13 * (1.0 + d.grad[i].abs()));
        }
    }
}

#[test]
fn domain_errors_are_reported() {
    let e = parse_with_names("sqrt(x1)", &NAMES).unwrap();
    assert!(e.eval_f64(&[-1.0, 0.0]).is_err());
    let e = parse_with_names("log(x1 - 1)", &NAMES).unwrap();
    assert!(e.eval_f64(&[0.5, 0.0]).is_err());
}
