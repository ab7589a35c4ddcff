use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geodequiv"))
        .args(args)
        .env_remove("GEODEQUIV_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &[&str] = &["--trajectories", "3", "--points", "10", "--t-end", "2"];

#[test]
fn verify_ellipsoid_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(&["verify", "--pair", "ellipsoid:1,2,3", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    assert_eq!(r["pair_id"], "ellipsoid:1,2,3");
    assert_eq!(r["seed"], 7);
    for (_, v) in r["drift"].as_object().unwrap() {
        assert!(v.as_f64().unwrap() <= 1e-6);
    }
    assert!(r["rank"].as_u64().unwrap() >= 2);
    assert!(r["involution"].is_array());
    assert_eq!(r["points"].as_array().unwrap().len(), 100);
}

#[test]
fn verify_perturbed_fails_with_named_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let mut args = vec!["verify", "--pair", "falsify:perturbed-lc", "--out", out.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    let o = run(&args);
    assert_eq!(code(&o), 1);
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("conservation: I_0"), "{stderr}");
    let r = read_json(&out);
    assert!(r["failures"].as_array().unwrap().iter().any(|f| f.as_str().unwrap().contains("I_0")));
    assert_eq!(r["passed"], false);
}

#[test]
fn invalid_count_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, "{}").unwrap();
    let arg = format!("lc:{}", spec.display());
    let o = run(&["verify", "--pair", &arg, "--trajectories", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["verify"])), 2);
    assert_eq!(code(&run(&["verify", "--pair", "nowhere:1"])), 2);
    assert_eq!(code(&run(&["verify", "--pair", "flat:2", "--tol-drift", "-1"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, "{\"pair\": \"flat:2\", \"bogus\": 1}").unwrap();
    let o = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("run.json"));
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (p, threads) in [(&a, "1"), (&b, "3")] {
        let mut args = vec!["verify", "--pair", "demo:lc3", "--seed", "11", "--out", p.to_str().unwrap()];
        args.extend_from_slice(SMALL);
        let o = Command::new(env!("CARGO_BIN_EXE_geodequiv"))
            .args(&args)
            .env("GEODEQUIV_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn bad_thread_count_is_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_geodequiv"))
        .args(["catalog"])
        .env("GEODEQUIV_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"pair": "demo:lc2", "seed": 5, "trajectories": 2, "points": 4, "t_end": 1.0, "format": "csv"}"#,
    )
    .unwrap();
    let out = dir.path().join("ints.csv");
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--points", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,point_id,value"));
    // Two integrals at three points.
    assert_eq!(lines.count(), 6);
}

#[test]
fn factory_identity_pair_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("factory.json");
    let mut args = vec!["factory", "--pair", "flat:3", "--out", out.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    assert_eq!(code(&run(&args)), 0);
    let r = read_json(&out);
    for p in r["points"].as_array().unwrap() {
        let q: Vec<f64> = p["quotient"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        for (got, want) in q.iter().zip([1.0, -2.0, 1.0]) {
            assert!((got - want).abs() < 1e-9);
        }
    }
    let csv = dir.path().join("factory.csv");
    let mut args = vec!["factory", "--pair", "ellipsoid:1,2,3", "--format", "csv", "--out", csv.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    assert_eq!(code(&run(&args)), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("point_id,t_or_coeff_index,value,remainder\n"));
}

#[test]
fn factory_flags_perturbed_pair() {
    let mut args = vec!["factory", "--pair", "falsify:perturbed-lc", "--out", "/dev/null"];
    args.extend_from_slice(SMALL);
    let o = run(&args);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("quotient coefficient"));
}

#[test]
fn geodesic_exports_straight_lines() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["geodesic", "--pair", "flat:2", "--trajectories", "2", "--t-end", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("trajectory_000_g.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,xi1,xi2"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    let r0 = &rows[0];
    for r in &rows {
        for i in 0..2 {
            assert!((r[1 + i] - (r0[1 + i] + r[0] * r0[3 + i])).abs() < 1e-9);
            assert!((r[3 + i] - r0[3 + i]).abs() < 1e-12);
        }
    }
    let s = read_json(&dir.path().join("summary.json"));
    assert!(s["max_curve_distance"].as_f64().unwrap() < 1e-12);
}

#[test]
fn geodesic_ellipsoid_reports_chart_exit() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["geodesic", "--pair", "ellipsoid:1,2,3", "--trajectories", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&dir.path().join("summary.json"));
    assert!(s["max_curve_distance"].as_f64().unwrap() <= 1e-5);
    for r in s["runs"].as_array().unwrap() {
        assert_eq!(r["exited_domain"].as_bool().unwrap(), r.get("warning").is_some());
    }
    assert!(String::from_utf8_lossy(&o.stderr).contains("left the chart"));
}

#[test]
fn levi_civita_build_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pair.json");
    let o = run(&["levi-civita-build", "--pair", "demo:lc-block", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let pair = read_json(&out);
    assert!(pair["g"]["g[1][1]"].is_string());
    assert!(pair["gbar"]["g[3][3]"].is_string());
    // The emitted pair feeds back into a run config.
    let cfg = dir.path().join("run.json");
    let run_cfg = serde_json::json!({"pair": pair, "trajectories": 2, "points": 4, "t_end": 1.0});
    std::fs::write(&cfg, run_cfg.to_string()).unwrap();
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--out", "/dev/null"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&run(&["levi-civita-build", "--pair", "sphere"])), 2);
}

#[test]
fn catalog_lists_entries() {
    let o = run(&["catalog", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"falsify:perturbed-lc[:amp]"));
    assert!(names.contains(&"ellipsoid:a1,a2,..."));
}
