mod common;

use cnlc::compile::{compile_source, compile_with_registry};
use cnlc::solver::{smoke_check, SolverError};

fn solver() -> Option<(tempfile::TempDir, std::path::PathBuf)> {
    let dir = tempfile::tempdir().unwrap();
    match common::python_solver(dir.path()) {
        Some(p) => Some((dir, p)),
        None => {
            eprintln!("SKIP: python clingo module not available");
            None
        }
    }
}

#[test]
fn every_corpus_program_grounds() {
    let Some((_dir, solver)) = solver() else { return };
    for case in common::load_cases() {
        let (_, registry) = compile_with_registry(&case.input).unwrap();
        let program = compile_source(&case.input).unwrap();
        let constants: Vec<(String, i64)> = registry.open_constants().into_iter().map(|c| (c, 1)).collect();
        if let Err(e) = smoke_check(&program, &solver, &constants) {
            panic!("{}: {e}\n{program}", case.name);
        }
    }
}

#[test]
fn corrupted_aggregate_is_rejected() {
    let Some((_dir, solver)) = solver() else { return };
    let case = common::load_cases().into_iter().find(|c| c.name == "weak_count_maximized").unwrap();
    let program = compile_source(&case.input).unwrap();
    assert!(program.contains("#count{"));
    let broken = program.replacen("#count{", "#count{{", 1);
    assert!(matches!(smoke_check(&broken, &solver, &[]), Err(SolverError::Rejected(_))));
}

#[test]
fn missing_solver_is_reported() {
    let e = smoke_check("a.", std::path::Path::new("/nonexistent/clingo"), &[]).unwrap_err();
    assert!(matches!(e, SolverError::NotFound(_)));
}
