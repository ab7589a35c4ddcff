use geodequiv::catalog::{self, lc_battery};
use geodequiv::geometry::{integrate_geodesic, GeodesicOptions};
use geodequiv::hamiltonian::{conservation_drift, involution_matrix, involution_matrix_of, integral_functions, PhaseFunction};
use geodequiv::integrals::{all_integrals, MetricPair};
use geodequiv::levi_civita::{
    decompose_ik, elementary_symmetric, lc_integral_functions, lc_integrals, phi_from_rho, pi_from_phi, rho_from_phi,
    LcSpecConfig,
};
use geodequiv::sampling::sample_phase_points;
use proptest::prelude::*;

fn increasing() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..1.0, 1..6).prop_map(|gaps| {
        gaps.iter()
            .scan(0.0, |acc, g| {
                *acc += g;
                Some(*acc)
            })
            .collect()
    })
}

/// Coefficients of `Π (t + v_i)` in descending powers.
fn expand(vals: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for v in vals {
        let mut next = vec![0.0; c.len() + 1];
        for (k, ck) in c.iter().enumerate() {
            next[k] += ck;
            next[k + 1] += ck * v;
        }
        c = next;
    }
    c
}

proptest! {
    #[test]
    fn rho_and_phi_round_trip(phi in increasing()) {
        let rho = rho_from_phi(&phi);
        let back = phi_from_rho(&rho);
        for (a, b) in phi.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs());
        }
    }

    #[test]
    fn elementary_symmetric_matches_expansion(vals in prop::collection::vec(-2.0f64..2.0, 0..7)) {
        let c = expand(&vals);
        for (k, ck) in c.iter().enumerate() {
            let s: f64 = elementary_symmetric(&vals, k);
            prop_assert!((s - ck).abs() <= 1e-12 * (1.0 + ck.abs()));
        }
    }

    #[test]
    fn pi_factors_positive_for_ordered_phi(phi in increasing()) {
        let pi = pi_from_phi(&phi);
        let m = phi.len();
        for (i, p) in pi.iter().enumerate() {
            // Π_i = Π_{j<i}(φ_i − φ_j) Π_{j>i}(φ_j − φ_i) is positive for
            // ordered φ.
            prop_assert!(*p > 0.0, "{i} of {m}: {p}");
        }
    }
}

fn points(spec: &geodequiv::levi_civita::LcSpec, count: usize, seed: u64) -> Vec<geodequiv::geometry::PhasePoint> {
    let pair = spec.build_pair().unwrap();
    sample_phase_points(&pair, count, seed, &|x| spec.phi_values(x).is_ok()).unwrap()
}

#[test]
fn decomposition_holds_on_battery() {
    for (name, spec) in lc_battery().unwrap() {
        let pair = spec.build_pair().unwrap();
        for p in points(&spec, 20, 2) {
            let ints = all_integrals(&pair, &p).unwrap();
            let scale = ints.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for (k, want) in ints.iter().enumerate().take(spec.dim()) {
                let d = decompose_ik(&spec, k).unwrap();
                let v = d.evaluate(&spec, &p).unwrap();
                assert!((v - want).abs() <= 1e-10 * scale, "{name} k={k}: {v} vs {want}");
            }
        }
    }
}

#[test]
fn one_dimensional_blocks_reduce_to_signed_lc_integrals() {
    for name in ["demo:lc2", "demo:lc3"] {
        let spec = catalog::lookup(name).unwrap().lc_spec.unwrap();
        let pair = spec.build_pair().unwrap();
        let n = spec.dim();
        for p in points(&spec, 20, 3) {
            let ints = all_integrals(&pair, &p).unwrap();
            let l = lc_integrals(&spec, &p).unwrap();
            for k in 0..n {
                let sign = if (n + k).is_multiple_of(2) { 1.0 } else { -1.0 };
                assert!((ints[k] - sign * l[n - 1 - k]).abs() <= 1e-12 * (1.0 + l[n - 1 - k].abs()));
            }
        }
    }
}

#[test]
fn lc_integrals_conserved_and_commuting() {
    for (name, spec) in lc_battery().unwrap() {
        let pair = spec.build_pair().unwrap();
        let pts = points(&spec, 3, 4);
        let lcs = lc_integral_functions(&spec);
        let ints = integral_functions(&pair);
        for p in &pts {
            let traj = integrate_geodesic(&pair.g, p, 3.0, &GeodesicOptions::default()).unwrap();
            for f in &lcs {
                assert!(conservation_drift(f, &traj).unwrap() <= 1e-6, "{name} {}", f.label());
            }
        }
        let mut all: Vec<&dyn PhaseFunction> = lcs.iter().map(|f| f as &dyn PhaseFunction).collect();
        all.extend(ints.iter().map(|f| f as &dyn PhaseFunction));
        let m = involution_matrix_of(&all, &pair.g, &pts).unwrap();
        let worst = m.iter().flatten().copied().fold(0.0, f64::max);
        assert!(worst <= 1e-9, "{name}: {worst}");
    }
}

#[test]
fn shifted_family_is_equivalent_to_g() {
    let spec = catalog::demo_lc_block().unwrap();
    let pair = spec.build_pair().unwrap();
    let pts = points(&spec, 10, 5);
    // c = 0 recovers ḡ.
    let g0 = spec.gc_metric(0.0).unwrap();
    for p in &pts {
        let (a, b) = (g0.values(&p.x).unwrap(), pair.gbar.values(&p.x).unwrap());
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }
    // c^{m+1} g_c → g as c → ∞.
    let c = 1e6;
    let gc = spec.gc_metric(c).unwrap();
    let power = c.powi(spec.m() as i32 + 1);
    for p in &pts {
        let (a, b) = (gc.values(&p.x).unwrap(), pair.g.values(&p.x).unwrap());
        for (u, v) in a.iter().zip(&b) {
            assert!((power * u - v).abs() <= 1e-4 * (1.0 + v.abs()));
        }
    }
    // Any member pairs with g into a geodesically equivalent pair.
    let shifted = MetricPair::new(pair.g.clone(), spec.gc_metric(0.7).unwrap()).unwrap();
    let m = involution_matrix(&shifted, &pts).unwrap();
    assert!(m.iter().flatten().all(|v| *v <= 1e-10));
    let traj = integrate_geodesic(&shifted.g, &pts[0], 3.0, &GeodesicOptions::default()).unwrap();
    for f in integral_functions(&shifted) {
        assert!(conservation_drift(&f, &traj).unwrap() <= 1e-6);
    }
    assert!(spec.gc_metric(-1.0).is_err());
}

#[test]
fn config_round_trip_preserves_metrics() {
    for (name, spec) in lc_battery().unwrap() {
        let cfg = spec.to_config();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: LcSpecConfig = serde_json::from_str(&json).unwrap();
        let rebuilt = back.build().unwrap().build_pair().unwrap();
        let pair = spec.build_pair().unwrap();
        for p in points(&spec, 3, 6) {
            assert_eq!(pair.g.values(&p.x).unwrap(), rebuilt.g.values(&p.x).unwrap(), "{name}");
            assert_eq!(pair.gbar.values(&p.x).unwrap(), rebuilt.gbar.values(&p.x).unwrap(), "{name}");
        }
    }
}
