//! Command-line front end.
//!
//! Exit codes: 0 success, 1 syntax errors, 2 semantic errors or a failed
//! check, 3 I/O failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::compile::{render_lines, translate};
use crate::corpus::{load_corpus, run_case};
use crate::error::Diagnostic;
use crate::solver::{locate, smoke_check, SolverError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SYNTAX: i32 = 1;
pub const EXIT_SEMANTIC: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Compiles controlled natural language specifications into ASP programs.
#[derive(Debug, Parser)]
#[command(name = "cnlc", version)]
pub struct Args {
    /// CNL input file.
    pub input: Option<PathBuf>,
    /// Output file (standard output when absent).
    pub output_file: Option<PathBuf>,
    /// Output file, same as the second positional argument.
    #[arg(long, conflicts_with = "output_file")]
    pub output: Option<PathBuf>,
    /// Parse and check rule safety without writing a program.
    #[arg(long)]
    pub check_only: bool,
    /// Run the golden corpus in the given directory.
    #[arg(long, value_name = "DIR")]
    pub corpus: Option<PathBuf>,
    /// Ground the compiled program with this solver executable.
    #[arg(long, value_name = "PATH")]
    pub solver: Option<PathBuf>,
}

fn report(path: &Path, diags: &[Diagnostic], err: &mut dyn Write) -> i32 {
    for d in diags {
        let _ = writeln!(err, "{}:{d}", path.display());
    }
    if diags.iter().any(|d| d.error.is_syntactic()) {
        EXIT_SYNTAX
    } else {
        EXIT_SEMANTIC
    }
}

fn corpus(dir: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cases = match load_corpus(dir) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return EXIT_IO;
        }
    };
    let mut failed = 0;
    for case in &cases {
        let r = run_case(case);
        failed += usize::from(!r.passed());
        let _ = writeln!(out, "{r}");
    }
    let _ = writeln!(out, "{} passed, {failed} failed", cases.len() - failed);
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_SEMANTIC
    }
}

/// Runs the compiler with parsed arguments.
pub fn run(args: &Args, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if let Some(dir) = &args.corpus {
        return corpus(dir, out, err);
    }
    let Some(input) = &args.input else {
        let _ = writeln!(err, "missing input file");
        return EXIT_IO;
    };
    let source = match std::fs::read_to_string(input) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", input.display());
            return EXIT_IO;
        }
    };
    let (translations, registry) = match translate(&source) {
        Ok(r) => r,
        Err(diags) => return report(input, &diags, err),
    };
    if args.check_only {
        return EXIT_OK;
    }
    let text = render_lines(&translations);
    if let Some(path) = args.solver.as_deref() {
        let solver = locate(Some(path)).unwrap_or_else(|| path.to_path_buf());
        let constants: Vec<(String, i64)> = registry.open_constants().into_iter().map(|c| (c, 1)).collect();
        match smoke_check(&text, &solver, &constants) {
            Ok(()) => {}
            Err(SolverError::NotFound(p)) => {
                let _ = writeln!(err, "solver {} not found, grounding check skipped", p.display());
            }
            Err(e) => {
                let _ = writeln!(err, "{e}");
                return EXIT_SEMANTIC;
            }
        }
    }
    match args.output.as_ref().or(args.output_file.as_ref()) {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                let _ = writeln!(err, "{}: {e}", path.display());
                return EXIT_IO;
            }
        }
        None => {
            if out.write_all(text.as_bytes()).is_err() {
                return EXIT_IO;
            }
        }
    }
    EXIT_OK
}

/// Parses `argv` and runs; usage errors exit with code 3.
pub fn main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Args::try_parse_from(argv) {
        Ok(args) => run(&args, out, err),
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                let _ = write!(out, "{e}");
                EXIT_OK
            }
            _ => {
                let _ = write!(err, "{e}");
                EXIT_IO
            }
        },
    }
}
