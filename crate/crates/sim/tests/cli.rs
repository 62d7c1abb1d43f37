use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn kmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kmt")).args(args).env_remove("KMT_WORKERS").output().expect("kmt runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn text(out: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn smoke(lambda: f64, n_min: usize, replications: usize) -> String {
    format!(
        r#"{{
  "model": {{"n": 8, "laws": ["rademacher"], "lambda": {lambda}}},
  "blocking": {{"n_min": {n_min}}},
  "experiment": {{"replications": {replications}, "seed": 3, "retain_levels": true, "a3_replications": 2000, "bootstrap": 50}}
}}"#
    )
}

#[test]
fn validate_accepts_lambda_below_lambda_star() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &smoke(0.5, 3, 10));
    let out = kmt(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    assert!(text(&out).contains("0.5671432904"));
}

#[test]
fn validate_warns_when_lambda_too_large() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &smoke(0.6, 3, 10));
    let out = kmt(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{}", text(&out));
    assert!(text(&out).contains("warning"));
}

#[test]
fn validate_rejects_small_n_min() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &smoke(0.5, 2, 10));
    let out = kmt(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", text(&out));
    assert!(text(&out).contains("n_min > 2C_max/C_min"));
}

#[test]
fn malformed_config_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &smoke(0.5, 3, 10).replace("\"seed\": 3", "\"seed\": 3, \"sed\": 1"));
    let out = kmt(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let msg = text(&out);
    assert!(msg.contains("sed") && msg.contains("line 4"), "{msg}");
}

#[test]
fn run_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &smoke(0.5, 3, 1500));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let out = kmt(&["run", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap(), "--workers", "1"]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    let out = kmt(&["run", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--workers", "8"]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    for f in ["summary.json", "replications.csv", "quantile_violations.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn workers_environment_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &smoke(0.5, 3, 20));
    let out_dir = dir.path().join("out");
    let out = Command::new(env!("CARGO_BIN_EXE_kmt"))
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--workers", "4"])
        .env("KMT_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", text(&out));
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["workers"], 2);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &smoke(0.5, 3, 20));
    let out_dir = dir.path().join("deep/nested/out");
    let out = kmt(&["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--seed", "99"]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 99);
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &smoke(0.5, 3, 10));
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "not a directory").unwrap();
    let out = kmt(&["run", "--config", cfg.to_str().unwrap(), "--out", blocker.join("out").to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", text(&out));
}

#[test]
fn report_on_empty_directory_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = kmt(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(text(&out).contains("manifest.json"));
}

#[test]
fn report_is_idempotent_and_detects_changes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &smoke(0.5, 3, 200));
    let res = dir.path().join("res");
    assert_eq!(code(&kmt(&["run", "--config", cfg.to_str().unwrap(), "--out", res.to_str().unwrap()])), 0);
    let first = kmt(&["report", res.to_str().unwrap()]);
    assert_eq!(code(&first), 0, "{}", text(&first));
    let curves = std::fs::read(res.join("tail_curves.csv")).unwrap();
    let second = kmt(&["report", res.to_str().unwrap()]);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(curves, std::fs::read(res.join("tail_curves.csv")).unwrap());

    std::fs::remove_file(res.join("replications.csv")).unwrap();
    let out = kmt(&["report", res.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(text(&out).contains("replications.csv"));
}

#[test]
fn sweep_writes_growth_table() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{
  "model": {"n": 8, "laws": ["rademacher"], "lambda": 0.5},
  "blocking": {"n_min": 3},
  "experiment": {"replications": 300, "seed": 4, "baseline": true, "a3_replications": 1000, "bootstrap": 20},
  "output": {"replications_csv": false}
}"#;
    let cfg = write_config(dir.path(), "c.json", body);
    let res = dir.path().join("sweep");
    let out = kmt(&["sweep", "--config", cfg.to_str().unwrap(), "--out", res.to_str().unwrap(), "--n", "8,16,32", "--no-confirm"]);
    assert!(code(&out) <= 1, "{}", text(&out));
    assert!(res.join("sweep.json").exists() && res.join("n16/summary.json").exists());
    let report = kmt(&["report", res.to_str().unwrap()]);
    assert_eq!(code(&report), 0, "{}", text(&report));
    let table = text(&report);
    assert!(table.contains("growth exponent") && table.contains("baseline growth exponent"), "{table}");
}
