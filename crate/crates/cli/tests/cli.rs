use std::path::Path;
use std::process::{Command, Output};

fn stealthrmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stealthrmt")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const RING: &str = "function mpc = ring
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0 0 0 0 1 1 0 230 1 1.1 0.9;
    2 1 0 0 0 0 1 1 0 230 1 1.1 0.9;
    3 1 0 0 0 0 1 1 0 230 1 1.1 0.9;
];
mpc.branch = [
    1 2 0 0.5 0 0 0 0 0 0 1 -360 360;
    2 3 0 0.25 0 0 0 0 0 0 1 -360 360;
    1 3 0 0.2 0 0 0 0 0 0 1 -360 360;
];
";

#[test]
fn parse_case_summary() {
    let o = stealthrmt(&["parse-case", "--case", "ieee118"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("buses          118"), "{s}");
    assert!(s.contains("states         117"), "{s}");
}

#[test]
fn case_dir_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("case30.m"), RING).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_stealthrmt"))
        .args(["parse-case", "--case", "ieee30"])
        .env("STEALTHRMT_CASE_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("buses          3"));
}

#[test]
fn ergodic_run_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o =
        stealthrmt(&["ergodic", "--trials", "50", "--beta", "2,5,10", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("ergodic.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(out.join("ergodic.gp").exists());

    let again = dir.path().join("again");
    let manifest = out.join("ergodic.manifest.json");
    let o = stealthrmt(&["replay", manifest.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("byte for byte"));
    assert_eq!(csv, std::fs::read_to_string(again.join("ergodic.csv")).unwrap());
}

#[test]
fn flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"master_seed": 1, "trials": 20, "beta_grid": [3]}"#).unwrap();
    let out = dir.path().join("o");
    let o = stealthrmt(&[
        "ergodic",
        "--config",
        cfg.to_str().unwrap(),
        "--beta",
        "2,10,30",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let manifest = std::fs::read_to_string(out.join("ergodic.manifest.json")).unwrap();
    assert!(manifest.contains("\"master_seed\": 7"), "{manifest}");
    assert!(manifest.contains("\"trials\": 20"));
    assert_eq!(std::fs::read_to_string(out.join("ergodic.csv")).unwrap().lines().count(), 4);
}

fn code(args: &[&str]) -> Option<i32> {
    stealthrmt(args).status.code()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&["ergodic", "--r", "1.5", "--out", out]), Some(2));
    assert_eq!(code(&["ergodic", "--trials", "1", "--out", out]), Some(2));
    assert_eq!(code(&["variance", "--beta", "1", "--trials", "10", "--out", out]), Some(3));
    assert_eq!(code(&["ergodic", "--config", "/definitely/not/here.json"]), Some(4));
    assert_eq!(code(&["parse-case", "--case", "/definitely/not/here.m"]), Some(4));
    assert_eq!(code(&["ks-check", "--trials", "10", "--out", out]), Some(2));
    assert_eq!(code(&["replay", "/definitely/not/here.json"]), Some(4));
}

#[test]
fn checks_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = stealthrmt(&["corr-check", "--trials", "200", "--beta", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(out.join("corr-check.csv")).unwrap();
    assert!(csv.starts_with("beta,trials,correlation\n"));
    assert!(!Path::new(&out.join("corr-check.gp")).exists());
}
