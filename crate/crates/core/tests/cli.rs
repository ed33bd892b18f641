use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cda_market::io::read_steps;
use cda_market::SimConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cda-market"))
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).env_remove("CDA_MARKET_WORKERS").output().unwrap();
    out
}

fn write_config(dir: &Path, steps: u64) -> String {
    let cfg = SimConfig {
        steps,
        n_agents: 100,
        snapshot_steps: vec![steps / 2],
        ..SimConfig::default()
    };
    let path = dir.join("small.txt");
    fs::write(&path, cfg.to_text()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file() && p.file_name().unwrap() != "experiment.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn missing_config_fails_and_names_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(&["run", "--config", "/nonexistent/cfg.txt", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("/nonexistent/cfg.txt"), "{err}");
}

#[test]
fn bad_key_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.txt");
    fs::write(&cfg, "steps = 100\nnot_a_key = 3\n").unwrap();
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("not_a_key"));
}

#[test]
fn run_writes_one_row_per_step_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), 1_000);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let o = run(&["run", "--config", &cfg, "--seed", "7", "--out", dir.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let steps = read_steps(&a.join("steps.csv")).unwrap();
    assert_eq!(steps.len(), 1_000);
    let text = fs::read_to_string(a.join("steps.csv")).unwrap();
    assert_eq!(text.lines().count(), 1_001);
    assert!(a.join("lob_500.csv").is_file());
    assert!(a.join("manifest.json").is_file());
    assert_eq!(dir_bytes(&a), dir_bytes(&b));
}

#[test]
fn saved_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), 800);
    let first = tmp.path().join("first");
    assert!(run(&["run", "--config", &cfg, "--seed", "3", "--out", first.to_str().unwrap()]).status.success());
    let saved = first.join("config.txt");
    let second = tmp.path().join("second");
    assert!(run(&["run", "--config", saved.to_str().unwrap(), "--seed", "3", "--out", second.to_str().unwrap()])
        .status
        .success());
    assert_eq!(fs::read(first.join("steps.csv")).unwrap(), fs::read(second.join("steps.csv")).unwrap());
    assert_eq!(fs::read(first.join("trades.csv")).unwrap(), fs::read(second.join("trades.csv")).unwrap());
}

#[test]
fn ensemble_then_analyze() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), 20_000);
    let ens = tmp.path().join("ens");
    let o = bin()
        .args(["ensemble", "--config", &cfg, "--seeds", "3", "--out", ens.to_str().unwrap()])
        .env("CDA_MARKET_WORKERS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for s in 1..=3 {
        assert!(ens.join(format!("run-{s}/steps.csv")).is_file());
    }
    assert!(ens.join("experiment.json").is_file());

    let ana = tmp.path().join("ana");
    let o = run(&["analyze", "--in", ens.to_str().unwrap(), "--out", ana.to_str().unwrap(), "--bin-width", "0.02"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(ana.join("analysis.json")).unwrap()).unwrap();
    assert_eq!(json["runs"], 3);
    assert_eq!(json["options"]["bin_width"], 0.02);
    assert!(ana.join("sigma_vs_pc.csv").is_file());
    assert!(ana.join("kurtosis.csv").is_file());
}

#[test]
fn analyze_rejects_missing_input() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["analyze", "--in", "/nonexistent/runs", "--out", tmp.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/runs"));
}
