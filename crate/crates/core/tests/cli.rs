use std::path::PathBuf;
use std::process::{Command, Output};

use cartan_core::cli::main_with;

fn problem(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../problems/{name}.cartan"))
}

fn cartan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cartan")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    cartan(args).status.code().unwrap()
}

fn path(name: &str) -> String {
    problem(name).display().to_string()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["run", &path("flat-gl2")]), 0);
    assert_eq!(code(&["run", &path("toy-diag")]), 0);
    assert_eq!(code(&["run", &path("genuine-invariant")]), 2);
    assert_eq!(code(&["run", &path("lagrangian"), "--max-loops", "1"]), 3);
    assert_eq!(code(&["run", "/nonexistent.cartan"]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
}

#[test]
fn run_writes_identical_json_twice() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = cartan(&["run", &path("lagrangian"), "--seed", "7", "--json", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(!x.is_empty());
    assert_eq!(x, y);
    let v: serde_json::Value = serde_json::from_slice(&x).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["outcome"], "involutive");
}

#[test]
fn characters_subcommand() {
    let o = cartan(&["characters", &path("flat-gl2")]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("s = (2, 2), r2 = 6"), "{text}");
    assert!(text.trim_end().ends_with("agree"), "{text}");
}

#[test]
fn crosscheck_subcommand() {
    let o = cartan(&["crosscheck", &path("toy-diag")]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("crosscheck: agree"), "{text}");
    // Negative control: a missing membership equation enlarges the jet system.
    let o = cartan(&["crosscheck", &path("corrupted-membership")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stdout).unwrap().contains("MISMATCH"));
}

#[test]
fn check_subcommand() {
    let o = cartan(&["check", &path("lagrangian")]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("dimension 3, group dimension 5"), "{text}");
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cartan");
    std::fs::write(&bad, "[coordinates]\nx\n[coframe]\neta1 = x*dx +\n[group]\n").unwrap();
    let o = cartan(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("line 4"));
}

#[test]
fn in_process_driver_matches_binary() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let args = ["cartan", "run", &path("toy-diag")];
    let c = main_with(args, &mut out, &mut err);
    let o = cartan(&args[1..]);
    assert_eq!(Some(c), o.status.code());
    assert_eq!(out, o.stdout);
    assert!(err.is_empty());
}

#[test]
fn unwritable_json_path_is_an_error() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let args = ["cartan", "run", &path("flat-identity"), "--json", "/nonexistent/dir/out.json"];
    assert_eq!(main_with(args, &mut out, &mut err), 1);
    assert!(String::from_utf8(err).unwrap().contains("cannot write"));
}
