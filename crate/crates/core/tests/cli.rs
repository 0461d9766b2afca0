mod common;

use std::path::Path;
use std::process::Command;

use cnlc::cli::{main_with, EXIT_IO, EXIT_OK, EXIT_SEMANTIC, EXIT_SYNTAX};

const GOOD: &str = "A node goes from 1 to 3.\nNode 1 is chosen.\n";

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("cnlc").chain(args.iter().copied());
    let code = main_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn compiles_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "a.cnl", GOOD);
    let (code, out, err) = run(&[&input]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(out, "node(1..3).\nchosen(1).\n");
}

#[test]
fn writes_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "a.cnl", GOOD);
    for flag in [true, false] {
        let target = dir.path().join(format!("out{flag}.lp"));
        let t = target.to_string_lossy().into_owned();
        let args: Vec<&str> = if flag { vec![&input, "--output", &t] } else { vec![&input, &t] };
        let (code, out, _) = run(&args);
        assert_eq!(code, EXIT_OK);
        assert!(out.is_empty());
        assert_eq!(std::fs::read_to_string(&target).unwrap(), "node(1..3).\nchosen(1).\n");
    }
}

#[test]
fn check_only_prints_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "a.cnl", GOOD);
    assert_eq!(run(&["--check-only", &input]), (EXIT_OK, String::new(), String::new()));
}

#[test]
fn syntax_errors_exit_1_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "a.cnl", "A node goes from 1 to 3.\nNode 1 is chosen\n");
    let (code, out, err) = run(&[&input]);
    assert_eq!(code, EXIT_SYNTAX);
    assert!(out.is_empty());
    assert!(err.starts_with(&format!("{input}:2:")), "{err}");
}

#[test]
fn semantic_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "a.cnl", "A day is a temporal concept expressed in days ranging from 02/01/2024 to 01/01/2024.\n");
    let (code, _, err) = run(&["--check-only", &input]);
    assert_eq!(code, EXIT_SEMANTIC);
    assert!(err.contains("empty range"), "{err}");
}

#[test]
fn io_and_usage_errors_exit_3() {
    assert_eq!(run(&["/nonexistent/input.cnl"]).0, EXIT_IO);
    assert_eq!(run(&[]).0, EXIT_IO);
    assert_eq!(run(&["--frobnicate", "a.cnl"]).0, EXIT_IO);
    assert_eq!(run(&["a.cnl", "b.lp", "--output", "c.lp"]).0, EXIT_IO);
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "a.cnl", GOOD);
    let unwritable = dir.path().join("missing").join("out.lp");
    assert_eq!(run(&[&input, "--output", &unwritable.to_string_lossy()]).0, EXIT_IO);
}

#[test]
fn help_succeeds() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("--check-only") && out.contains("--corpus"));
}

#[test]
fn corpus_run_reports_every_case() {
    let (code, out, _) = run(&["--corpus", &common::corpus_dir().to_string_lossy()]);
    assert_eq!(code, EXIT_OK, "{out}");
    let n = common::load_cases().len();
    assert!(out.ends_with(&format!("{n} passed, 0 failed\n")), "{out}");
}

#[test]
fn failing_corpus_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let case = dir.path().join("broken");
    std::fs::create_dir(&case).unwrap();
    write(&case, "input.cnl", GOOD);
    write(&case, "expected.lp", "node(1..3).\nchosen(2).\n");
    let (code, out, _) = run(&["--corpus", &dir.path().to_string_lossy()]);
    assert_eq!(code, EXIT_SEMANTIC);
    assert!(out.contains("FAILED broken") && out.contains("+chosen(1)."), "{out}");
}

#[test]
fn missing_solver_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "a.cnl", GOOD);
    let (code, out, err) = run(&[&input, "--solver", "/nonexistent/clingo"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, "node(1..3).\nchosen(1).\n");
    assert!(err.contains("skipped"), "{err}");
}

#[test]
fn binary_uses_the_same_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "a.cnl", GOOD);
    let bad = write(dir.path(), "b.cnl", "Node 1 is chosen");
    let bin = env!("CARGO_BIN_EXE_cnlc");
    let ok = Command::new(bin).arg(&good).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert_eq!(String::from_utf8_lossy(&ok.stdout), "node(1..3).\nchosen(1).\n");
    assert_eq!(Command::new(bin).arg(&bad).output().unwrap().status.code(), Some(EXIT_SYNTAX));
    assert_eq!(Command::new(bin).arg("--nope").output().unwrap().status.code(), Some(EXIT_IO));
}
