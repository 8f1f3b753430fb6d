use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fembem-bench"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("cfg.json");
    std::fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn passing_run_exits_zero_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"ks": [4.0, 8.0]}"#);
    let out = bench(&["filters", "--config", &cfg], &dir.path().join("res"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().count() >= 3 && stdout.lines().all(|l| l.starts_with("PASS ")));
    for f in ["filters.csv", "filters.json", "filters.svg", "filters_timings.json"] {
        assert!(dir.path().join("res").join(f).exists(), "{f}");
    }
}

#[test]
fn output_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"levels": [1], "samples": 4}"#);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(bench(&["adjoint", "--config", &cfg, "--threads", "1", "--seed", "5"], &a).status.success());
    assert!(bench(&["adjoint", "--config", &cfg, "--threads", "3", "--seed", "5"], &b).status.success());
    for f in ["adjoint.csv", "adjoint.json", "adjoint.svg"] {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
    let csv = std::fs::read_to_string(a.join("adjoint.csv")).unwrap();
    assert!(csv.lines().nth(2).unwrap().contains(",5,"));
}

#[test]
fn failed_criterion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"ks": [4.0], "criteria": {"filter_identity_max": 1e-30}}"#);
    let out = bench(&["filters", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().lines().any(|l| l.starts_with("FAIL ")));
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"ks": []}"#);
    let out = bench(&["converge", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("invalid configuration"));
    let out = bench(&["converge", "--config", "/nonexistent/cfg.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench(&["nope"], dir.path());
    assert!(!out.status.success());
}
