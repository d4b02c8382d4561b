//! End-to-end checks of the installed binary: subcommand behavior, exit
//! codes and byte-level output stability.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cascade-rd"))
}

fn repo_config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn fm_subcommand_matches_golden() {
    let out = run(&["fm"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.contains("Rb >= I(X;A)"));

    let rev = run(&["fm", "--order", "reversed"]);
    assert!(rev.status.success());
    assert_eq!(String::from_utf8(rev.stdout).unwrap(), text);

    let dropped = run(&["fm", "--drop-nonneg", "r2d"]);
    assert_eq!(dropped.status.code(), Some(3));
}

#[test]
fn eval_subcommand_reads_config_file() {
    let cfg = repo_config("cascade_lossless.json");
    let out = run(&["eval", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("R1 = 1.00000000e0"), "{text}");
    assert!(text.contains("R2 = 1.00000000e0"));
}

#[test]
fn eval_broadcast_config() {
    let cfg = repo_config("broadcast_copy.json");
    let out = run(&["eval", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("L_2b ="), "{text}");
}

#[test]
fn frontier_subcommand_is_reproducible_and_writes_files() {
    let cfg = repo_config("cascade_lossless.json");
    let a = run(&["frontier", "--config", cfg.to_str().unwrap()]);
    let b = run(&["frontier", "--config", cfg.to_str().unwrap()]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "frontier CSV must be byte-identical");

    let tmp = std::env::temp_dir().join("cascade_rd_frontier_test.csv");
    let _ = std::fs::remove_file(&tmp);
    let c = run(&[
        "frontier",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.to_str().unwrap(),
    ]);
    assert!(c.status.success());
    let written = std::fs::read(&tmp).unwrap();
    assert_eq!(written, a.stdout);
    let _ = std::fs::remove_file(&tmp);
}

#[test]
fn membership_subcommand_exit_codes() {
    let cfg = repo_config("cascade_lossless.json");
    let yes = run(&[
        "membership",
        "--config",
        cfg.to_str().unwrap(),
        "--r1",
        "1.1",
        "--r2",
        "1.1",
    ]);
    assert_eq!(yes.status.code(), Some(0));
    assert!(String::from_utf8(yes.stdout).unwrap().starts_with("ACHIEVABLE"));

    let no = run(&[
        "membership",
        "--config",
        cfg.to_str().unwrap(),
        "--r1",
        "0",
        "--r2",
        "0",
    ]);
    assert_eq!(no.status.code(), Some(2));
}

#[test]
fn missing_config_is_a_config_error() {
    let out = run(&["eval", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oracle_subcommand_passes_on_the_lossless_config() {
    let cfg = repo_config("cascade_lossless.json");
    let out = run(&["oracle", "--config", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.trim_end().ends_with("PASS"), "{text}");
}
