//! Grounding check of generated programs with an external solver.
//!
//! The solver is run in grounding mode (`--mode=gringo --text`) with the
//! program on standard input. Constants without a value receive
//! placeholders through `-c name=value`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("solver not found: {0}")]
    NotFound(PathBuf),
    #[error("solver rejected the program:\n{0}")]
    Rejected(String),
    #[error("solver i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Grounds `program`; succeeds iff the solver exits without error.
pub fn smoke_check(program: &str, solver: &Path, constants: &[(String, i64)]) -> Result<(), SolverError> {
    let mut cmd = Command::new(solver);
    cmd.arg("--mode=gringo").arg("--text");
    for (name, value) in constants {
        cmd.arg("-c").arg(format!("{name}={value}"));
    }
    let mut child = match cmd.stdin(Stdio::piped()).stdout(Stdio::null()).stderr(Stdio::piped()).spawn() {
        Ok(c) => c,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(SolverError::NotFound(solver.to_path_buf())),
        Err(e) => return Err(e.into()),
    };
    child.stdin.take().expect("piped stdin").write_all(program.as_bytes())?;
    let out = child.wait_with_output()?;
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    if !out.status.success() || stderr.contains("error") {
        return Err(SolverError::Rejected(stderr));
    }
    Ok(())
}

/// Looks for a solver: an explicit path, `$CNLC_SOLVER`, or `clingo` on `PATH`.
pub fn locate(explicit: Option<&Path>) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    if let Some(p) = std::env::var_os("CNLC_SOLVER") {
        return Some(PathBuf::from(p));
    }
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path).map(|d| d.join("clingo")).find(|p| p.is_file())
}
