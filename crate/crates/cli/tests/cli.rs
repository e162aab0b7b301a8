use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn regulab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regulab"))
        .args(args)
        .env_remove("REGULAB_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_the_csv_set() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("global");
    let o = regulab(&["simulate", "--scenario", s(&scenario("global.toml")), "--out", s(&out), "--replicas", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["density.csv", "pair_correlation.csv", "analytic.csv", "events.csv", "scenario.toml"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    assert!(!out.join("report.json").exists());
    let density = fs::read_to_string(out.join("density.csv")).unwrap();
    assert!(density.starts_with("time,mean_density,stderr,n_replicas\n0.5,"));
    assert_eq!(density.lines().count(), 6);
    let echo = fs::read_to_string(out.join("scenario.toml")).unwrap();
    assert!(echo.contains("replicas = 20"), "{echo}");
}

#[test]
fn overrides_beat_the_file_and_env_sets_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let path = scenario("global.toml");
    let args = |out: &Path| {
        vec![
            "simulate".to_string(),
            "--scenario".into(),
            s(&path).into(),
            "--out".into(),
            s(out).into(),
            "--replicas".into(),
            "10".into(),
            "--seed".into(),
            "77".into(),
        ]
    };
    let o = regulab(&args(&a).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(&o), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_regulab"))
        .args(args(&b))
        .env("REGULAB_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let echo = fs::read_to_string(a.join("scenario.toml")).unwrap();
    assert!(echo.contains("seed = 77"));
    assert_eq!(fs::read(a.join("density.csv")).unwrap(), fs::read(b.join("density.csv")).unwrap());
}

#[test]
fn population_cap_breach_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("free.toml"))
        .unwrap()
        .replace("replicas = 400", "replicas = 4\npopulation_cap = 10");
    let path = tmp.path().join("tiny_cap.toml");
    fs::write(&path, text).unwrap();
    let o = regulab(&["simulate", "--scenario", s(&path), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeded cap"));
}

#[test]
fn missing_or_invalid_scenario_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = regulab(&["simulate", "--scenario", "/nonexistent/none.toml", "--out", s(tmp.path())]);
    assert_eq!(code(&o), 2);
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "[window]\ndimension = 1\nside = 10.0\n").unwrap();
    let o = regulab(&["verify", "--scenario", s(&bad), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unwritable_output_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = regulab(&[
        "simulate",
        "--scenario",
        s(&scenario("global.toml")),
        "--out",
        s(&blocker.join("sub")),
        "--replicas",
        "2",
    ]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_passes_canonical_and_fails_negative_with_report() {
    let tmp = tempfile::tempdir().unwrap();
    let good = tmp.path().join("good");
    let o = regulab(&["verify", "--scenario", s(&scenario("global_k2.toml")), "--out", s(&good)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));

    let bad = tmp.path().join("bad");
    let o = regulab(&[
        "verify",
        "--scenario",
        s(&scenario("negative/global_wrong_mortality.toml")),
        "--out",
        s(&bad),
    ]);
    assert_eq!(code(&o), 1);
    let report = fs::read_to_string(bad.join("report.json")).unwrap();
    assert!(report.contains("\"overall\": false"));

    // The report is a pure function of the persisted files.
    let o = regulab(&["report", "--out", s(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(o.stderr.is_empty(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(bad.join("report.json")).unwrap(), report);
}

#[test]
fn verify_needs_a_verify_section() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("global.toml")).unwrap().replace("[verify]", "");
    let path = tmp.path().join("noverify.toml");
    fs::write(&path, text).unwrap();
    let o = regulab(&["verify", "--scenario", s(&path), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn analytic_competition_constants() {
    let tmp = tempfile::tempdir().unwrap();
    let o = regulab(&["analytic", "--scenario", s(&scenario("competition.toml")), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("constants.json")).unwrap()).unwrap();
    let c = v["competition"]["c"].as_f64().unwrap();
    let d = v["competition"]["d"].as_f64().unwrap();
    assert!((c - 0.5).abs() < 1e-9);
    assert!((d - 1.05 * 2f64.sqrt()).abs() < 1e-9);
    assert!(v["competition"]["h_star"].as_f64().unwrap() >= 0.5);
    let csv = fs::read_to_string(tmp.path().join("analytic.csv")).unwrap();
    assert!(csv.starts_with("time,value,curve_name\n"));
    assert!(csv.contains(",riccati_solution\n"));
    assert!(csv.contains("second_order_bound["));
}

#[test]
fn analytic_riccati_out_of_regime_exits_2() {
    let o = regulab(&["analytic", "--scenario", s(&scenario("competition.toml")), "--g0", "1.0"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("out of regime"));
}

#[test]
fn analytic_free_has_slope_sigma() {
    let o = regulab(&["analytic", "--scenario", s(&scenario("free.toml"))]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f[2], "free_density");
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    let (t0, v0) = rows[0];
    let (t1, v1) = *rows.last().unwrap();
    assert!(((v1 - v0) / (t1 - t0) - 1.0).abs() < 1e-12);
}
