//! End-to-end tests of the binary: exit codes, file handling, and the
//! NILRIC_CATALOG search path.

use std::process::{Command, Output};

fn nilric(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nilric"))
        .args(args)
        .env_remove("NILRIC_CATALOG")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn info_reports_profile() {
    let out = nilric(&["info", "L_5_3", "--kv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("profile.u = 2"));
    assert!(text.contains("profile.a = 1"));
    assert!(text.contains("profile.z = 1"));
    assert!(text.contains("profile.m = 1"));
    assert!(text.contains("central_series.dims = 5 2 1 0"));
}

#[test]
fn info_abelian() {
    let out = nilric(&["info", "abelian_3", "--kv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("profile.u = 0"));
    assert!(text.contains("profile.a = 3"));
}

#[test]
fn signatures_exclude_counterexample() {
    let out = nilric(&["signatures", "L_5_3", "--conjecture", "--kv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("attainable.count = 4"));
    assert!(!text
        .lines()
        .find(|l| l.starts_with("attainable ="))
        .unwrap()
        .contains("(4,0,1)"));
    assert!(text.contains("difference = (4,0,1)"));
}

#[test]
fn signatures_abelian_singleton() {
    let out = nilric(&["signatures", "abelian_5", "--kv"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("attainable = (0,5,0)"));
}

#[test]
fn unknown_algebra_is_usage_error() {
    let out = nilric(&["info", "definitely_not_an_algebra"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("available"));
}

#[test]
fn bad_flag_is_usage_error() {
    let out = nilric(&["info", "L_5_3", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn realize_reports_target_and_exit_codes() {
    let ok = nilric(&["realize", "L_5_3", "--target", "3,0,2", "--kv"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("achieved = (3,0,2)"));

    let unattainable = nilric(&["realize", "L_5_3", "--target", "4,0,1"]);
    assert_eq!(unattainable.status.code(), Some(2));
    let err = String::from_utf8_lossy(&unattainable.stderr);
    assert!(err.contains("violates"), "missing bound citation: {err}");

    let malformed = nilric(&["realize", "L_5_3", "--target", "4,0"]);
    assert_eq!(malformed.status.code(), Some(1));
}

#[test]
fn realize_abelian_identity_frame() {
    let out = nilric(&["realize", "abelian_3", "--target", "0,3,0", "--kv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("achieved = (0,3,0)"));
    assert!(text.contains("frame.row.0 = 1.000000000000e0 0.000000000000e0 0.000000000000e0"));
}

#[test]
fn sample_passes_on_catalog_algebras() {
    let out = nilric(&["sample", "heisenberg_3", "--n", "50", "--seed", "3", "--kv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("violations.count = 0"));
    assert!(text.contains("count.(2,0,1) = 50"));
}

#[test]
fn flow_reports_convergence() {
    let out = nilric(&["flow", "L_5_3", "--kv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("converged = true"));
    assert!(text.contains("kernel_verified = true"));
    assert!(text.contains("signature = (2,2,1)"));
}

#[test]
fn loads_algebra_from_file_and_env_dir() {
    let dir = std::env::temp_dir().join(format!("nilric-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("my_algebra.txt");
    std::fs::write(&path, "# test algebra\ndim 3\n1 2 3 1\n").unwrap();

    // Direct path.
    let out = nilric(&["info", path.to_str().unwrap(), "--kv"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("algebra = my_algebra"));

    // Via the catalog directory.
    let out = Command::new(env!("CARGO_BIN_EXE_nilric"))
        .args(["info", "my_algebra", "--kv"])
        .env("NILRIC_CATALOG", &dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("profile.u = 2"));

    // Malformed file is a computation error.
    let bad = dir.join("bad.txt");
    std::fs::write(&bad, "dim 3\n2 1 3 1\n").unwrap();
    let out = nilric(&["info", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn output_flag_writes_report() {
    let path = std::env::temp_dir().join(format!("nilric-out-{}.txt", std::process::id()));
    let out = nilric(&[
        "info",
        "heisenberg_3",
        "--kv",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written, stdout(&out));
    std::fs::remove_file(&path).ok();
}
