use std::path::Path;
use std::process::{Command, Output};

use shotnoise_cli::ExperimentConfig;

fn shotnoise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shotnoise"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_simulate(out: &Path, seed: &str, extra: &[&str]) -> Output {
    let mut args = vec![
        "simulate",
        "--out",
        out.to_str().unwrap(),
        "--seed",
        seed,
        "--set",
        "simulate.replications=3",
        "--set",
        "simulate.b=10",
    ];
    args.extend_from_slice(extra);
    shotnoise(&args)
}

#[test]
fn unknown_kernel_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_simulate(dir.path(), "42", &["--set", "simulate.kernel=cauchy:w=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown kernel"));
}

#[test]
fn bad_flags_and_keys_are_usage_errors() {
    assert_eq!(shotnoise(&["simulate", "--bogus"]).status.code(), Some(2));
    assert_eq!(shotnoise(&["simulate", "--set", "simulate.nope=1"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = shotnoise(&["verify", "--out", dir.path().to_str().unwrap(), "--suites", "13"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_intensity_gives_a_zero_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = shotnoise(&[
        "simulate",
        "--out",
        dir.path().to_str().unwrap(),
        "--set",
        "simulate.intensity=0",
        "--set",
        "simulate.replications=1",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("path_0000.csv")).unwrap();
    assert!(!dir.path().join("path_0001.csv").exists());
    for line in text.lines().skip(1) {
        assert!(line.split(',').skip(1).all(|v| v == "0.0"), "{line}");
    }
}

#[test]
fn same_seed_gives_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(small_simulate(a.path(), "42", &[]).status.success());
    assert!(small_simulate(b.path(), "42", &[]).status.success());
    for r in 0..3 {
        let name = format!("path_{r:04}.csv");
        assert_eq!(
            std::fs::read(a.path().join(&name)).unwrap(),
            std::fs::read(b.path().join(&name)).unwrap()
        );
    }
    let c = tempfile::tempdir().unwrap();
    assert!(small_simulate(c.path(), "43", &[]).status.success());
    assert_ne!(
        std::fs::read(a.path().join("path_0000.csv")).unwrap(),
        std::fs::read(c.path().join("path_0000.csv")).unwrap()
    );
}

#[test]
fn crossing_curve_is_thread_invariant() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = shotnoise(&[
            "crossings",
            "--out",
            dir.path().to_str().unwrap(),
            "--threads",
            threads,
            "--set",
            "crossings.replications=40",
            "--set",
            "crossings.alpha_n=9",
        ]);
        assert!(out.status.success());
        std::fs::read(dir.path().join("crossings.csv")).unwrap()
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn manifest_echoes_config_and_certificates() {
    let dir = tempfile::tempdir().unwrap();
    assert!(small_simulate(dir.path(), "42", &[]).status.success());
    let m: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 42);
    assert!(m["version"].as_str().unwrap().starts_with('v'));
    assert_eq!(m["config"]["simulate"]["replications"], 3);
    assert_eq!(m["config"]["crossings"]["kernel"], "gaussian:sigma=1");
    let paths = m["results"]["paths"].as_array().unwrap();
    assert_eq!(paths.len(), 3);
    for p in paths {
        let bounds = p["certificate"]["bounds"].as_array().unwrap();
        assert!(bounds.iter().all(|b| b.as_f64().unwrap() <= 1e-8));
    }
    let config: ExperimentConfig = serde_json::from_value(m["config"].clone()).unwrap();
    assert_eq!(config.master_seed, 42);
    assert!(dir.path().join("path_0002.json").exists());
}

#[test]
fn resolved_config_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = shotnoise(&["config", "--seed", "7", "--set", "scalespace.sigmas=[0.5, 2.0]"]);
    assert!(out.status.success());
    let file = dir.path().join("exp.toml");
    std::fs::write(&file, &out.stdout).unwrap();
    let again = shotnoise(&["config", "--config", file.to_str().unwrap()]);
    assert_eq!(out.stdout, again.stdout);
    let cfg: ExperimentConfig = toml::from_str(&String::from_utf8(again.stdout).unwrap()).unwrap();
    assert_eq!(cfg.master_seed, 7);
    assert_eq!(cfg.scalespace.sigmas, vec![0.5, 2.0]);
}

#[test]
fn verify_runs_selected_suites() {
    let dir = tempfile::tempdir().unwrap();
    let out = shotnoise(&["verify", "--out", dir.path().to_str().unwrap(), "--suites", "9,11"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let suites: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("verify.json")).unwrap()).unwrap();
    let ids: Vec<u64> = suites.as_array().unwrap().iter().map(|s| s["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, vec![9, 11]);
    assert!(std::fs::read_to_string(dir.path().join("verify.txt")).unwrap().contains("2/2 suites pass"));
}
