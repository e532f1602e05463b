//! End-to-end checks of the `rmc` binary: exit codes and the basic
//! synth → solve → log workflow.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn rmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn help_exits_zero() {
    let out = rmc(&["--help"]);
    assert_eq!(exit_code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["synth", "solve", "bench", "background"] {
        assert!(text.contains(sub), "--help must list `{sub}`");
    }
}

#[test]
fn usage_errors_exit_two() {
    // unknown subcommand
    assert_eq!(exit_code(&rmc(&["frobnicate"])), 2);
    // unknown solver name
    assert_eq!(
        exit_code(&rmc(&["solve", "--input", "x.mtx", "--rank", "5", "--solver", "bogus"])),
        2
    );
    // unknown benchmark case
    assert_eq!(exit_code(&rmc(&["bench", "--case", "case99"])), 2);
    // missing required flag
    assert_eq!(exit_code(&rmc(&["solve", "--rank", "5"])), 2);
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempdir().unwrap();
    // input file does not exist
    let missing = dir.path().join("missing.mtx");
    let out = rmc(&["solve", "--input", missing.to_str().unwrap(), "--rank", "3"]);
    assert_eq!(exit_code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    // input exists but is not MatrixMarket
    let garbage = dir.path().join("garbage.mtx");
    fs::write(&garbage, "not a matrix\n").unwrap();
    let out = rmc(&["solve", "--input", garbage.to_str().unwrap(), "--rank", "3"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn background_rejects_other_solvers() {
    let dir = tempdir().unwrap();
    let out = rmc(&[
        "background",
        "--input",
        dir.path().to_str().unwrap(),
        "--output",
        dir.path().to_str().unwrap(),
        "--solver",
        "manpg",
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn bench_with_no_cases_is_a_no_op() {
    let out = rmc(&["bench"]);
    assert_eq!(exit_code(&out), 0);
}

#[test]
fn synth_solve_workflow_produces_factors_and_log() {
    let dir = tempdir().unwrap();
    let mtx = dir.path().join("obs.mtx");
    let out_dir = dir.path().join("factors");
    let log = dir.path().join("trace.csv");

    // a deliberately small instance: case1-scaled dimensions with sparser
    // sampling and a short iteration budget keep this a smoke test
    let out = rmc(&[
        "synth",
        "--case",
        "case1-scaled",
        "--seed",
        "7",
        "--rank",
        "3",
        "--sampling",
        "0.05",
        "--output",
        mtx.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "synth failed: {}", String::from_utf8_lossy(&out.stderr));
    assert!(mtx.exists());

    let out = rmc(&[
        "solve",
        "--input",
        mtx.to_str().unwrap(),
        "--rank",
        "3",
        "--max-iters",
        "10",
        "--log",
        log.to_str().unwrap(),
        "--output",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "solve failed: {}", String::from_utf8_lossy(&out.stderr));

    for name in ["u.bin", "v.bin", "s.mtx"] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
    let csv = fs::read_to_string(&log).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iter,elapsed_s,F,norm_dU_sq,norm_dS_sq,gamma,epsilon,rel_diff"
    );
    let first = lines.next().expect("at least one data row");
    assert!(first.starts_with("0,"));
    assert!(first.ends_with(','), "no ground truth, so rel_diff is blank");

    // u.bin header matches the requested shape: 500 rows, rank 3
    let u_bytes = fs::read(out_dir.join("u.bin")).unwrap();
    assert!(u_bytes.starts_with(b"500 3\n"));
}

#[test]
fn solve_is_reproducible_for_a_fixed_seed() {
    let dir = tempdir().unwrap();
    let mtx = dir.path().join("obs.mtx");
    rmc(&[
        "synth", "--case", "case1-scaled", "--seed", "3", "--rank", "2", "--sampling", "0.05",
        "--output", mtx.to_str().unwrap(),
    ]);
    let run = |tag: &str| -> Vec<u8> {
        let out_dir = dir.path().join(tag);
        let out = rmc(&[
            "solve",
            "--input",
            mtx.to_str().unwrap(),
            "--rank",
            "2",
            "--max-iters",
            "5",
            "--threads",
            "1",
            "--output",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0);
        fs::read(Path::new(&out_dir).join("u.bin")).unwrap()
    };
    assert_eq!(run("a"), run("b"), "same input and seed must give identical factors");
}
