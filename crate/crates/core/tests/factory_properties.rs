use geodequiv::catalog;
use geodequiv::factory::{
    a_scalar, crosscheck, delta_poly, determinant, factory_integrals, omega_g_at, pfaffian, pullback_phi_omega,
    rank_one_data, rank_one_delta, FormMatrix, PolyCoeffs,
};
use geodequiv::geometry::PhasePoint;
use geodequiv::integrals::MetricPair;
use geodequiv::sampling::sample_phase_points;
use proptest::prelude::*;

fn skew(entries: &[f64], n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            m[i * n + j] = entries[k];
            m[j * n + i] = -entries[k];
            k += 1;
        }
    }
    m
}

fn congruence(m: &[f64], s: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = (0..n)
                .flat_map(|a| (0..n).map(move |b| (a, b)))
                .map(|(a, b)| m[a * n + i] * s[a * n + b] * m[b * n + j])
                .sum();
        }
    }
    out
}

fn skew_case() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (1usize..=4).prop_flat_map(|h| {
        let n = 2 * h;
        (
            Just(n),
            prop::collection::vec(-2.0f64..2.0, n * (n - 1) / 2),
            prop::collection::vec(-1.5f64..1.5, n * n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pfaffian_squares_to_determinant((n, e, _) in skew_case()) {
        let s = skew(&e, n);
        let pf = pfaffian(&s, n).unwrap();
        let det = determinant(&s, n);
        prop_assert!((pf * pf - det).abs() <= 1e-10 * det.abs().max(1.0));
    }

    #[test]
    fn pfaffian_of_congruence((n, e, m) in skew_case()) {
        let s = skew(&e, n);
        let lhs = pfaffian(&congruence(&m, &s, n), n).unwrap();
        let rhs = determinant(&m, n) * pfaffian(&s, n).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn form_matrix_storage_round_trips((n, e, _) in skew_case()) {
        let s = skew(&e, n);
        let f = FormMatrix::from_dense(&s, n);
        prop_assert_eq!(f.to_dense(), s);
    }

    #[test]
    fn horner_remainder_is_value_at_root(c in prop::collection::vec(-3.0f64..3.0, 2..7), r in -2.0f64..2.0) {
        let p = PolyCoeffs::new(c);
        let (q, rem) = geodequiv::factory::horner_divide(&p, r);
        prop_assert!((rem - p.eval(r)).abs() <= 1e-12 * (1.0 + rem.abs()));
        for t in [-1.3, 0.2, 2.4] {
            let back = q.eval(t) * (t - r) + rem;
            prop_assert!((back - p.eval(t)).abs() <= 1e-10 * (1.0 + back.abs()));
        }
    }
}

const PAIRS: &[&str] = &["ellipsoid:1,2,3", "ellipsoid:1,2,3,5", "demo:lc2", "demo:lc3", "demo:lc-block", "demo:lc-block4"];

fn sample(name: &str, count: usize) -> (MetricPair, Vec<PhasePoint>) {
    let e = catalog::lookup(name).unwrap();
    let spec = e.lc_spec.clone();
    let pts = sample_phase_points(&e.pair, count, 17, &|x| spec.as_ref().is_none_or(|s| s.phi_values(x).is_ok()))
        .unwrap();
    (e.pair, pts)
}

#[test]
fn delta_squared_is_determinant_ratio() {
    for name in PAIRS {
        let (pair, pts) = sample(name, 10);
        let n2 = 2 * pair.dim();
        for p in &pts {
            let omega = omega_g_at(&pair.g, p).unwrap();
            let phi = pullback_phi_omega(&pair, p).unwrap();
            let det_omega = determinant(&omega.to_dense(), n2);
            let delta = delta_poly(&pair, p).unwrap();
            for t in [-0.7, 0.4, 1.9] {
                let ratio = determinant(&phi.sub_scaled(&omega, t).to_dense(), n2) / det_omega;
                let d = delta.eval(t);
                assert!((d * d - ratio).abs() <= 1e-8 * ratio.abs().max(1.0), "{name}: {} vs {ratio}", d * d);
            }
        }
    }
}

#[test]
fn rank_one_form_matches_interpolated_delta() {
    for name in PAIRS {
        let (pair, pts) = sample(name, 10);
        for p in &pts {
            let (d, _) = rank_one_data(&pair, p).unwrap();
            let delta = delta_poly(&pair, p).unwrap();
            for t in [-1.1, 0.0, 0.6, 2.2] {
                let (a, b) = (rank_one_delta(&d, t), delta.eval(t));
                assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{name}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn a_is_a_root_and_constant_term_closes() {
    for name in PAIRS {
        let (pair, pts) = sample(name, 10);
        for p in &pts {
            let out = factory_integrals(&pair, p).unwrap();
            let a = a_scalar(&pair, p).unwrap();
            let n = pair.dim();
            // a_0 + a·b_0 = 0 with a_0, b_0 the constant coefficients of Δ
            // and of the descending quotient, signs as in (t − a)Q(t).
            let a0 = out.delta.coeffs[n];
            let b0 = out.quotient.coeffs[n - 1];
            assert!((a0 + a * b0).abs() <= 1e-10 * (1.0 + a0.abs()), "{name}");
            assert!(out.relative_remainder() <= 1e-10);
            assert!(crosscheck(&pair, p).unwrap().max_delta <= 1e-9);
        }
    }
}

#[test]
fn identity_pair_gives_binomial_powers() {
    for name in ["flat:3", "sphere"] {
        let (pair, pts) = sample(name, 5);
        let n = pair.dim();
        for p in &pts {
            let out = factory_integrals(&pair, p).unwrap();
            assert!((out.a - 1.0).abs() < 1e-14);
            let want = PolyCoeffs::binomial_power(1.0, n - 1);
            for (got, w) in out.quotient.coeffs.iter().zip(&want.coeffs) {
                assert!((got - w).abs() < 1e-10, "{name}: {:?}", out.quotient.coeffs);
            }
        }
    }
}

#[test]
fn zero_velocity_rejected() {
    let (pair, pts) = sample("demo:lc2", 1);
    let p = PhasePoint { x: pts[0].x.clone(), xi: vec![0.0, 0.0] };
    assert!(factory_integrals(&pair, &p).is_err());
    assert!(rank_one_data(&pair, &p).is_err());
}
