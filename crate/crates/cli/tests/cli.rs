use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn hetlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetlab"))
        .args(args)
        .env_remove("HETLAB_SEED")
        .output()
        .expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn analyze_two_saddle_prints_theta_one() {
    let chain = data("two_saddle.json");
    let out = hetlab(&["analyze", "--chain", p(&chain)]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.starts_with("theta = 1\n"), "{stdout}");
    assert!(stdout.contains("regime   PowerLaw"));
}

#[test]
fn analyze_report_json_keys() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let out = hetlab(&["analyze", "--chain", p(&data("three_saddle.json")), "--out", p(&json)]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    for key in ["alpha", "kappa", "H", "H_prime", "J", "bar_alpha", "theta", "theta_partial", "chi_bar", "regime"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!((v["theta"].as_f64().unwrap() - 5.0 / 3.0).abs() < 1e-12);
    assert!(dir.path().join("report.json.manifest.json").exists());
}

#[test]
fn missing_file_is_a_validation_error() {
    let out = hetlab(&["analyze", "--chain", "/nonexistent/chain.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("/nonexistent/chain.json"));
}

#[test]
fn zero_samples_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let chain = data("two_saddle.json");
    let out = hetlab(&["fit", "--chain", p(&chain), "--samples", "0", "--out", p(&csv)]);
    assert_eq!(out.status.code(), Some(1), "{}", text(&out.stderr));
    assert!(!csv.exists());
    let out = hetlab(&["simulate", "--chain", p(&chain), "--eps", "0.1", "--samples", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_flag_and_bad_seed_are_validation_errors() {
    assert_eq!(hetlab(&["analyze", "--chian", "x"]).status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_hetlab"))
        .args(["simulate", "--chain", p(&data("two_saddle.json")), "--eps", "0.1", "--samples", "10"])
        .env("HETLAB_SEED", "minus one")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("HETLAB_SEED"));
}

#[test]
fn runtime_failure_exits_two() {
    // escapes at rate ~0.2 eps: 100 paths per rung leave every rung short of 10 hits
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let chain = data("two_saddle.json");
    let args = ["fit", "--chain", p(&chain), "--eps-ladder", "0.01,0.005,0.0025"];
    let out = hetlab(&[&args[..], &["--samples", "100", "--out", p(&csv), "--identity-maps"]].concat());
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stderr));
    assert!(csv.exists());
}

fn simulate(dir: &Path, tag: &str, threads: &str, seed_env: Option<&str>) -> (String, String) {
    let (json, csv) = (dir.join(format!("{tag}.json")), dir.join(format!("{tag}.csv")));
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hetlab"));
    cmd.args(["simulate", "--chain", p(&data("two_saddle.json")), "--eps", "0.1", "--samples", "3000"])
        .args(["--seed", "5", "--threads", threads, "--out", p(&json), "--record-paths", p(&csv)])
        .env_remove("HETLAB_SEED");
    if let Some(s) = seed_env {
        cmd.env("HETLAB_SEED", s);
    }
    let out = cmd.output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    (fs::read_to_string(json).unwrap(), fs::read_to_string(csv).unwrap())
}

#[test]
fn simulate_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a", "1", None);
    let b = simulate(dir.path(), "b", "2", None);
    assert_eq!(a, b);
    let csv = &a.1;
    assert!(csv.starts_with("path_id,escaped,total_time,exit_1,side_1,loc_1,exit_2,side_2,loc_2\n"));
    assert_eq!(csv.lines().count(), 3001);
    let v: Value = serde_json::from_str(&a.0).unwrap();
    assert_eq!(v["seed"], 5);
    let escaped = csv.lines().skip(1).filter(|l| l.split(',').nth(1) == Some("1")).count() as u64;
    assert_eq!(v["hits"].as_u64().unwrap(), escaped);
    assert!(v["ci_low"].as_f64().unwrap() <= v["p_hat"].as_f64().unwrap());
    // the summary alone matches the streaming path
    let out = hetlab(&["simulate", "--chain", p(&data("two_saddle.json")), "--eps", "0.1", "--samples", "3000", "--seed", "5"]);
    let streamed: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(streamed, v);
}

#[test]
fn seed_env_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let (json, _) = simulate(dir.path(), "env", "1", Some("77"));
    let v: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["seed"], 77);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("env.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 77);
}

fn fit(dir: &Path, tag: &str) -> Output {
    let (csv, svg) = (dir.join(format!("{tag}.csv")), dir.join(format!("{tag}.svg")));
    hetlab(&[
        "fit",
        "--chain",
        p(&data("two_saddle.json")),
        "--eps-ladder",
        "0.2,0.1,0.05",
        "--samples",
        "4000",
        "--seed",
        "3",
        "--identity-maps",
        "--out",
        p(&csv),
        "--plot",
        p(&svg),
    ])
}

#[test]
fn fit_outputs_are_reproducible_and_manifested() {
    let dir = tempfile::tempdir().unwrap();
    for tag in ["a", "b"] {
        let out = fit(dir.path(), tag);
        assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["predicted_theta"], 1.0);
        assert!(v["fit"]["theta_hat"].is_f64());
    }
    let read = |n: &str| fs::read_to_string(dir.path().join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.svg"), read("b.svg"));
    let csv = read("a.csv");
    assert!(csv.starts_with("eps,hits,n,p_hat,ci_low,ci_high,timeouts\n"));
    assert_eq!(csv.lines().count(), 4);
    assert!(read("a.svg").starts_with("<svg"));

    let m: Value = serde_json::from_str(&read("a.csv.manifest.json")).unwrap();
    assert_eq!(m["subcommand"], "fit");
    assert_eq!(m["seed"], 3);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    let digest: String = Sha256::digest(csv.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(m["outputs"][0]["sha256"], digest.as_str());
    let chain_bytes = fs::read(data("two_saddle.json")).unwrap();
    let digest: String = Sha256::digest(&chain_bytes).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(m["inputs"][0]["sha256"], digest.as_str());
}

#[test]
fn hierarchy_report_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let (json, dot) = (dir.path().join("h.json"), dir.path().join("h.dot"));
    let out = hetlab(&["hierarchy", "--network", p(&data("cellular_flow_4x4.json")), "--out", p(&json), "--dot", p(&dot)]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["heuristic"], true);
    let levels = v["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 5);
    assert!(levels[0].is_null());
    assert!((levels[2].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(fs::read_to_string(&dot).unwrap().starts_with("digraph"));
}

#[test]
fn predict_exit_direction_and_prefactor() {
    let s = data("saddle.json");
    let out = hetlab(&["predict", "--saddle", p(&s), "--kind", "exit-direction", "--x", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["value"]["left"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    let out = hetlab(&["predict", "--saddle", p(&s), "--kind", "prefactor"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    // rho = 1/2 has the closed form 3 g_{1.5}(0)
    let want = 3.0 / (2.0 * std::f64::consts::PI * 1.5).sqrt();
    assert!((v["value"].as_f64().unwrap() / want - 1.0).abs() < 1e-4);
    let out = hetlab(&["predict", "--saddle", p(&s), "--kind", "exit-time-tail", "--alpha", "2"]);
    assert_eq!(out.status.code(), Some(1));
}
