use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn covham(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covham")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_passes_on_shipped_scenarios() {
    for name in [
        "harmonic_classical.json",
        "harmonic_chi_q.json",
        "rigid_body_classical.json",
        "rigid_body_chi_x3.json",
        "metric_q.json",
        "polar.json",
        "spherical.json",
    ] {
        let out = covham(&["verify", path(&scenario(name)), "--samples", "20"]);
        assert_eq!(code(&out), 0, "{name}: {}", String::from_utf8_lossy(&out.stdout));
        assert_eq!(json(&out)["passed"], true);
    }
}

#[test]
fn verify_reports_inadmissible_structure() {
    let out = covham(&["verify", path(&scenario("canonical4_chi_q1.json")), "--samples", "10"]);
    assert_eq!(code(&out), 1);
    let report = json(&out);
    let gji = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "gji").unwrap();
    assert_eq!(gji["passed"], false);
    assert!((gji["residual"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
}

#[test]
fn simulate_csv_has_one_column_per_field() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("t.csv");
    let out = covham(&[
        "simulate",
        path(&scenario("rigid_body_chi_x3.json")),
        "--t-end",
        "0.1",
        "--dt",
        "0.01",
        "--observables",
        "x1^2+x2^2+x3^2,x3",
        "--out",
        path(&out_file),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_file).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x1,x2,x3,w,H,x1^2+x2^2+x3^2,x3");
    assert_eq!(lines.len(), 1 + 11);
    for line in &lines[1..] {
        assert_eq!(line.split(',').count(), 3 + 3 + 2);
    }
    let last_t: f64 = lines.last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert_eq!(last_t, 0.1);
}

#[test]
fn zero_horizon_gives_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("t.csv");
    let out = covham(&[
        "simulate",
        path(&scenario("harmonic_classical.json")),
        "--t-end",
        "0",
        "--out",
        path(&out_file),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read_to_string(&out_file).unwrap().lines().count(), 2);
}

#[test]
fn simulate_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("t.json");
    let out = covham(&[
        "simulate",
        path(&scenario("harmonic_chi_q.json")),
        "--t-end",
        "0.01",
        "--observables",
        "q",
        "--format",
        "json",
        "--out",
        path(&out_file),
    ]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0]["x"][0], 0.5);
    assert_eq!(rows[0]["observables"]["q"], 0.5);
}

#[test]
fn blow_up_writes_partial_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("harmonic_chi_q.json"))
        .unwrap()
        .replace("[0.5, 0.0]", "[1.0, 2.0]");
    let file = dir.path().join("blow.json");
    std::fs::write(&file, text).unwrap();
    let out_file = dir.path().join("t.csv");
    let out = covham(&["simulate", path(&file), "--out", path(&out_file)]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("blow-up at t ="));
    let rows = std::fs::read_to_string(&out_file).unwrap().lines().count() - 1;
    assert!(rows > 1 && rows < 5001, "{rows}");
}

#[test]
fn bracket_of_coordinates() {
    let out = covham(&[
        "bracket",
        path(&scenario("harmonic_chi_q.json")),
        "--f",
        "q",
        "--g",
        "p",
        "--at",
        "1,2",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["gspb"], 2.0);
    assert_eq!(v["gpb"], 1.0);
    assert_eq!(v["x_chi_pair"], 1.0);
}

#[test]
fn equilibrium_and_roots() {
    let file = scenario("harmonic_chi_q.json");
    let out = covham(&["equilibrium", path(&file), "--guess", "-1.5,0.1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["converged"], true);
    assert!((v["x"][0].as_f64().unwrap() + 2.0).abs() < 1e-10);

    let out = covham(&["roots", path(&file), "--at", "1,2"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["w"], 2.0);
    assert_eq!(v["discriminant"], 14.0);
    assert_eq!(v["oscillatory"], false);
}

#[test]
fn equilibrium_from_singular_start_is_reported() {
    let out = covham(&["equilibrium", path(&scenario("harmonic_chi_q.json")), "--guess", "-1,0"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["converged"], false);
}

#[test]
fn input_errors_exit_2() {
    let file = scenario("harmonic_chi_q.json");
    assert_eq!(code(&covham(&["roots", path(&file), "--at", "1,2,3"])), 2);
    assert_eq!(code(&covham(&["bracket", path(&file), "--f", "q+", "--g", "p", "--at", "0,0"])), 2);
    assert_eq!(code(&covham(&["bracket", path(&file), "--f", "z", "--g", "p", "--at", "0,0"])), 2);
    assert_eq!(code(&covham(&["verify", "/nonexistent.json"])), 2);
    assert_eq!(code(&covham(&["simulate", path(&file), "--dt", "0", "--out", "/tmp/x.csv"])), 2);
    assert_eq!(code(&covham(&["frobnicate"])), 2);
}

#[test]
fn domain_error_exits_3() {
    let out = covham(&[
        "bracket",
        path(&scenario("harmonic_chi_q.json")),
        "--f",
        "log(q)",
        "--g",
        "p",
        "--at",
        "-1,0",
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}
