use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn polydoa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polydoa")).args(args).output().expect("spawn polydoa")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("{e}: {text}"))
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn simulate(dir: &Path, name: &str, extra: &[&str]) -> String {
    let out = path(dir, name);
    let mut args = vec!["simulate", "--out", &out];
    args.extend_from_slice(extra);
    let res = polydoa(&args);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    out
}

#[test]
fn simulate_writes_full_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let f = simulate(dir.path(), "x.csv", &["--n", "10", "--doas", "-10,20", "--t", "100", "--snr", "10", "--seed", "1"]);
    let text = std::fs::read_to_string(&f).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.split(',').count() == 100));
    let g = simulate(dir.path(), "y.csv", &["--n", "10", "--doas", "-10,20", "--t", "100", "--snr", "10", "--seed", "1"]);
    assert_eq!(std::fs::read(f).unwrap(), std::fs::read(g).unwrap());
}

#[test]
fn simulate_from_scenario_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let sc = path(dir.path(), "sc.json");
    std::fs::write(&sc, r#"{"n_sensors": 6, "doas_deg": [5.0], "snapshots": 20, "snr_db": 3.0, "seed": 9}"#).unwrap();
    let a = simulate(dir.path(), "a.bin", &["--scenario", &sc, "--format", "bin"]);
    let b = simulate(dir.path(), "b.bin", &["--n", "6", "--doas", "5", "--t", "20", "--snr", "3", "--seed", "9", "--format", "bin"]);
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(&bytes[..4], b"SNAP");
    assert_eq!(bytes.len(), 12 + 6 * 20 * 16);
    assert_eq!(bytes, std::fs::read(b).unwrap());
}

#[test]
fn out_of_range_angle_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = polydoa(&["simulate", "--doas", "95", "--out", &path(dir.path(), "x.csv")]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "domain_error");
}

#[test]
fn unknown_method_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = simulate(dir.path(), "x.csv", &["--doas", "0"]);
    let out = polydoa(&["detect", "--in", &f, "--method", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "config_error");
}

#[test]
fn rootmusic_needs_a_positive_order() {
    let dir = tempfile::tempdir().unwrap();
    let f = simulate(dir.path(), "x.csv", &["--doas", "0"]);
    let out = polydoa(&["locate", "--in", &f, "--method", "rootmusic", "--l", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "domain_error");
}

#[test]
fn usage_errors_exit_2_and_help_exits_0() {
    let out = polydoa(&["detect"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "usage_error");
    assert_eq!(polydoa(&["--help"]).status.code(), Some(0));
}

#[test]
fn unreadable_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = polydoa(&["detect", "--in", &path(dir.path(), "missing.csv"), "--method", "mdl"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "io_error");

    let bad = path(dir.path(), "bad.csv");
    std::fs::write(&bad, "1+2j,oops\n").unwrap();
    let out = polydoa(&["detect", "--in", &bad, "--method", "mdl"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "parse_error");
}

#[test]
fn mdl_on_long_record() {
    let dir = tempfile::tempdir().unwrap();
    let f = simulate(dir.path(), "x.bin", &["--doas", "-10,20", "--t", "5000", "--snr", "20", "--seed", "2", "--format", "bin"]);
    let v = json(&polydoa(&["detect", "--in", &f, "--method", "mdl"]));
    assert_eq!(v["l_hat"], 2);
    assert_eq!(v["details"]["eigenvalues"].as_array().unwrap().len(), 10);
}

#[test]
fn cluster_on_pure_noise_usually_finds_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut hist = [0usize; 10];
    for seed in 0..7 {
        let f = simulate(dir.path(), &format!("n{seed}.csv"), &["--seed", &seed.to_string()]);
        let v = json(&polydoa(&["detect", "--in", &f, "--method", "cluster"]));
        hist[v["l_hat"].as_u64().unwrap() as usize] += 1;
    }
    let mode = (0..10).max_by_key(|&i| hist[i]).unwrap();
    assert_eq!(mode, 0, "{hist:?}");
}

#[test]
fn rootmusic_with_known_order() {
    let dir = tempfile::tempdir().unwrap();
    let f = simulate(dir.path(), "x.csv", &["--doas", "-10,20", "--t", "2000", "--snr", "30", "--seed", "3"]);
    let v = json(&polydoa(&["locate", "--in", &f, "--method", "rootmusic", "--l", "2"]));
    let doas: Vec<f64> = v["doas_deg"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((doas[0] + 10.0).abs() < 0.05 && (doas[1] - 20.0).abs() < 0.05, "{doas:?}");
}

#[test]
fn cluster_locates_the_wide_pair() {
    let dir = tempfile::tempdir().unwrap();
    let f = simulate(dir.path(), "x.csv", &["--doas", "-10,20", "--snr", "20", "--seed", "7"]);
    for method in ["cluster", "cluster+certify"] {
        let v = json(&polydoa(&["locate", "--in", &f, "--method", method, "--snr", "20"]));
        assert_eq!(v["l_hat"], 2);
        let doas: Vec<f64> = v["doas_deg"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert!((doas[0] + 10.0).abs() < 0.5 && (doas[1] - 20.0).abs() < 0.5, "{method}: {doas:?}");
    }
    let v = json(&polydoa(&["locate", "--in", &f, "--method", "cluster+certify", "--snr", "20"]));
    assert!(v["certificate_residual"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn gcd_of_simple_pair() {
    let v = json(&polydoa(&["gcd", "--f", "-1,0,1", "--g", "1,-2,1", "--zeta", "1e-8"]));
    assert_eq!(v["degree"], 1);
    let root = &v["roots"][0];
    assert!((root[0].as_f64().unwrap() - 1.0).abs() < 1e-9 && root[1].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn gcd_accepts_complex_coefficients() {
    // (x - j)(x + 2) and (x - j)(x - 3)
    let v = json(&polydoa(&["gcd", "--f", "-2j,2-1j,1", "--g", "3j,-3-1j,1"]));
    assert_eq!(v["degree"], 1);
    let root = &v["roots"][0];
    assert!(root[0].as_f64().unwrap().abs() < 1e-9 && (root[1].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn bench_single_point_single_row() {
    let out = polydoa(&["bench", "--trials", "1", "--snr-start", "10", "--snr-stop", "10", "--methods", "mdl"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("snr_db,method,trials,p_correct,rmse_deg"));
    assert!(lines[1].starts_with("10,mdl,1,"));
}

#[test]
fn bench_file_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (path(dir.path(), "a.csv"), path(dir.path(), "b.csv"));
    for f in [&a, &b] {
        let out = polydoa(&["bench", "--trials", "3", "--snr-start", "0", "--snr-stop", "6", "--methods", "aic,mdl,cluster,rootmusic,rootmusic_mdl,cluster_certify", "--seed", "5", "--out", f]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let sidecar: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(sidecar["master_seed"], 5);
    assert_eq!(std::fs::read_to_string(&a).unwrap().lines().count(), 1 + 3 * 6);
}

#[test]
fn bench_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "cfg.json");
    std::fs::write(
        &cfg,
        r#"{"n_sensors": 8, "doas_deg": [0.0], "snapshots": 50, "snr_start_db": 5.0, "snr_stop_db": 10.0,
            "snr_step_db": 5.0, "trials": 2, "methods": ["mdl", "rootmusic"], "master_seed": 1}"#,
    )
    .unwrap();
    let out = polydoa(&["bench", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1 + 2 * 2);

    std::fs::write(&cfg, r#"{"n_sensors": 8}"#).unwrap();
    assert_eq!(polydoa(&["bench", "--config", &cfg]).status.code(), Some(2));
}
