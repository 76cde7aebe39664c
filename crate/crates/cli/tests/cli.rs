use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sglab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sglab"))
        .args(args)
        .output()
        .expect("spawn sglab")
}

fn write_run_config(dir: &Path) -> String {
    let path = dir.join("run.json");
    let cfg = r#"{
  "n": 32,
  "model": "SGeps",
  "eps": 0.02,
  "t_final": 0.1,
  "sample_interval": 0.05,
  "seed": 3
}"#;
    fs::write(&path, cfg).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_outputs_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_run_config(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = sglab(&[
            "run",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--threads",
            "1",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [
        "diagnostics.ndjson",
        "exit.json",
        "rho_final.bin",
        "potential_final.bin",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let lines = fs::read_to_string(a.join("diagnostics.ndjson")).unwrap();
    assert_eq!(lines.lines().count(), 3);
}

#[test]
fn dump_then_load_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_run_config(tmp.path());
    let bin = tmp.path().join("rho0.bin");
    let o = sglab(&["dump", "--config", &cfg, "--out", bin.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = sglab(&["load", bin.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["header"]["n"], 32);
    assert_eq!(v["header"]["kind"], "rho");
    assert!(v["mean"].as_f64().unwrap().abs() < 1e-12);
    assert!(v["linf"].as_f64().unwrap() > 0.0);
}

#[test]
fn check_writes_suite_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("suite");
    let o = sglab(&[
        "check",
        "--seed",
        "5",
        "--count",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let nd = fs::read_to_string(out.join("suite.ndjson")).unwrap();
    assert!(nd.lines().count() >= 7);
    let csv = fs::read_to_string(out.join("suite_summary.csv")).unwrap();
    assert!(csv.starts_with("name,count,max_ratio,bound,failures"));
}

#[test]
fn bad_inputs_exit_with_infrastructure_code() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"n": 32, "model": "SGeps", "t_final": 1.0, "bogus": 1}"#,
    )
    .unwrap();
    let o = sglab(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let o = sglab(&["load", tmp.path().join("missing.bin").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let o = sglab(&["run"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn experiment_rejects_run_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_run_config(tmp.path());
    let o = sglab(&["experiment", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("experiment"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        sglab::lab::parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 6);
}
