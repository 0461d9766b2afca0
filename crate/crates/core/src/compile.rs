//! Source-to-program pipeline.

use crate::asp::Program;
use crate::error::Diagnostic;
use crate::parser::parse_document;
use crate::registry::Registry;
use crate::rewriter::{compile_document, Translation};
use crate::token::tokenize;

pub fn translate(source: &str) -> Result<(Vec<Translation>, Registry), Vec<Diagnostic>> {
    let tokens = tokenize(source)?;
    let doc = parse_document(&tokens)?;
    compile_document(&doc)
}

/// Tokenizes, parses and translates a CNL document, returning the program
/// and the registry built while translating it.
pub fn compile_with_registry(source: &str) -> Result<(Program, Registry), Vec<Diagnostic>> {
    let (translations, registry) = translate(source)?;
    Ok((Program { statements: translations.into_iter().flat_map(|t| t.statements).collect() }, registry))
}

pub fn compile_program(source: &str) -> Result<Program, Vec<Diagnostic>> {
    compile_with_registry(source).map(|(p, _)| p)
}

/// One line per proposition that produces statements.
pub fn render_lines(translations: &[Translation]) -> String {
    let mut out = String::new();
    for t in translations.iter().filter(|t| !t.statements.is_empty()) {
        let line: Vec<String> = t.statements.iter().map(|s| s.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Compiles a document to program text, the statements of each
/// proposition on one line.
pub fn compile_source(source: &str) -> Result<String, Vec<Diagnostic>> {
    translate(source).map(|(t, _)| render_lines(&t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document() {
        assert_eq!(compile_source("").unwrap(), "");
    }

    #[test]
    fn constant_in_fact() {
        let out = compile_source("A node goes from 1 to 5. start is a constant equal to 1. Node start is reachable.").unwrap();
        assert_eq!(out, "node(1..5).\nreachable(1).\n");
    }

    #[test]
    fn open_constants_are_reported() {
        let (_, reg) = compile_with_registry("timemax is a constant. start is a constant equal to 1.").unwrap();
        assert_eq!(reg.open_constants(), vec!["timemax".to_string()]);
    }
}
