//! Golden corpus: CNL inputs paired with expected ASP programs.
//!
//! Each case directory holds `input.cnl`, `expected.lp` and `case.toml`.
//! Programs are compared statement by statement after whitespace
//! normalization. Cases in `alpha` mode also rename variables per statement
//! and ignore statement order. Listed exceptions mask every expected
//! statement that starts on the given line of `expected.lp`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::compile::compile_source;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareMode {
    #[default]
    Exact,
    Alpha,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Exception {
    pub line: usize,
    #[serde(default)]
    pub location: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
pub struct CaseConfig {
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub compare: CompareMode,
    #[serde(default, rename = "exception")]
    pub exceptions: Vec<Exception>,
}

#[derive(Debug, Clone)]
pub struct Case {
    pub name: String,
    pub input: String,
    pub expected: String,
    pub config: CaseConfig,
}

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })
}

impl Case {
    pub fn load(dir: &Path) -> Result<Case, CorpusError> {
        let toml_path = dir.join("case.toml");
        let config = if toml_path.exists() {
            toml::from_str(&read(&toml_path)?).map_err(|source| CorpusError::Toml { path: toml_path, source })?
        } else {
            CaseConfig::default()
        };
        Ok(Case {
            name: dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            input: read(&dir.join("input.cnl"))?,
            expected: read(&dir.join("expected.lp"))?,
            config,
        })
    }
}

/// Loads every case directory below `root`, sorted by name.
pub fn load_corpus(root: &Path) -> Result<Vec<Case>, CorpusError> {
    let entries = std::fs::read_dir(root).map_err(|source| CorpusError::Io { path: root.to_path_buf(), source })?;
    let mut dirs: Vec<PathBuf> = entries.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.join("input.cnl").exists()).collect();
    dirs.sort();
    dirs.iter().map(|d| Case::load(d)).collect()
}

/// A statement of a program with the 1-based line it starts on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Located {
    pub line: usize,
    pub text: String,
}

fn ident(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Splits a program into statements. A statement ends at a `.` that is
/// outside quotes and not part of `..`; a `[w@l]` annotation belongs to
/// the preceding weak constraint.
pub fn split_statements(program: &str) -> Vec<Located> {
    let chars: Vec<char> = program.chars().collect();
    let mut out: Vec<Located> = Vec::new();
    let mut current = String::new();
    let mut start_line = None;
    let mut line = 1;
    let mut quoted = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if !c.is_whitespace() && start_line.is_none() {
            start_line = Some(line);
        }
        if c == '\n' {
            line += 1;
        }
        current.push(c);
        if c == '"' {
            quoted = !quoted;
        } else if c == '.' && !quoted {
            let prev_dot = i > 0 && chars[i - 1] == '.';
            let next_dot = chars.get(i + 1) == Some(&'.');
            if !prev_dot && !next_dot {
                let text = current.trim().to_string();
                let weak_tail = text.starts_with('[');
                match (weak_tail, out.last_mut()) {
                    (true, Some(last)) if last.text.starts_with(":~") => {
                        last.text.push(' ');
                        last.text.push_str(&text);
                    }
                    _ => out.push(Located { line: start_line.unwrap_or(line), text }),
                }
                current.clear();
                start_line = None;
            }
        }
        i += 1;
    }
    let rest = current.trim();
    match out.last_mut() {
        _ if rest.is_empty() => {}
        Some(last) if rest.starts_with('[') && last.text.starts_with(":~") => {
            last.text.push(' ');
            last.text.push_str(rest);
        }
        _ => out.push(Located { line: start_line.unwrap_or(line), text: rest.to_string() }),
    }
    out
}

/// Removes whitespace outside quotes, keeping one blank between two
/// identifier characters (as in `not a`).
pub fn normalize(statement: &str) -> String {
    let mut out = String::new();
    let mut quoted = false;
    let mut pending_space = false;
    for c in statement.chars() {
        if quoted {
            out.push(c);
            if c == '"' {
                quoted = false;
            }
            continue;
        }
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        if pending_space && out.chars().last().is_some_and(ident) && ident(c) {
            out.push(' ');
        }
        pending_space = false;
        if c == '"' {
            quoted = true;
        }
        out.push(c);
    }
    out
}

fn is_variable(word: &str) -> bool {
    let mut cs = word.chars();
    match cs.next() {
        Some(c) if c.is_uppercase() => true,
        Some('_') => cs.next().is_some_and(char::is_uppercase),
        _ => false,
    }
}

/// Renames the variables of a normalized statement to `V1, V2, ...` in
/// order of first occurrence.
pub fn alpha_normalize(statement: &str) -> String {
    let mut names: Vec<String> = Vec::new();
    let mut out = String::new();
    let mut word = String::new();
    let mut quoted = false;
    let flush = |word: &mut String, out: &mut String, names: &mut Vec<String>| {
        if word.is_empty() {
            return;
        }
        if is_variable(word) {
            let idx = match names.iter().position(|n| n == word) {
                Some(i) => i,
                None => {
                    names.push(word.clone());
                    names.len() - 1
                }
            };
            out.push_str(&format!("V{}", idx + 1));
        } else {
            out.push_str(word);
        }
        word.clear();
    };
    for c in statement.chars() {
        if quoted {
            out.push(c);
            quoted = c != '"';
            continue;
        }
        if ident(c) {
            word.push(c);
            continue;
        }
        flush(&mut word, &mut out, &mut names);
        if c == '"' {
            quoted = true;
        }
        out.push(c);
    }
    flush(&mut word, &mut out, &mut names);
    out
}

/// Result of comparing one case.
#[derive(Debug, Clone)]
pub struct CaseReport {
    pub name: String,
    pub masked: usize,
    pub failure: Option<String>,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

impl fmt::Display for CaseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.failure {
            None => write!(f, "ok {} ({} masked)", self.name, self.masked),
            Some(d) => write!(f, "FAILED {}\n{d}", self.name),
        }
    }
}

fn unified(expected: &[String], actual: &[String]) -> String {
    let e = expected.join("\n") + "\n";
    let a = actual.join("\n") + "\n";
    similar::TextDiff::from_lines(&e, &a).unified_diff().header("expected", "actual").to_string()
}

/// Compares an actual program against the expected text of `config`.
pub fn compare(expected: &str, actual: &str, config: &CaseConfig) -> (usize, Option<String>) {
    let masked_lines: Vec<usize> = config.exceptions.iter().map(|e| e.line).collect();
    let canon = |s: &str| {
        let n = normalize(s);
        if config.compare == CompareMode::Alpha {
            alpha_normalize(&n)
        } else {
            n
        }
    };
    let exp = split_statements(expected);
    let act: Vec<String> = split_statements(actual).iter().map(|s| canon(&s.text)).collect();
    let exp_c: Vec<(bool, String)> = exp.iter().map(|s| (masked_lines.contains(&s.line), canon(&s.text))).collect();
    let masked = exp_c.iter().filter(|(m, _)| *m).count();
    let shown_exp: Vec<String> = exp_c.iter().map(|(m, s)| if *m { format!("(masked) {s}") } else { s.clone() }).collect();
    if exp_c.len() != act.len() {
        return (masked, Some(format!("expected {} statements, got {}\n{}", exp_c.len(), act.len(), unified(&shown_exp, &act))));
    }
    let ok = match config.compare {
        CompareMode::Exact => exp_c.iter().zip(&act).all(|((m, e), a)| *m || e == a),
        CompareMode::Alpha => {
            let mut rest = act.clone();
            let mut ok = true;
            for (m, e) in &exp_c {
                if *m {
                    continue;
                }
                match rest.iter().position(|a| a == e) {
                    Some(i) => {
                        rest.remove(i);
                    }
                    None => ok = false,
                }
            }
            ok && rest.len() == masked
        }
    };
    if ok {
        (masked, None)
    } else {
        (masked, Some(unified(&shown_exp, &act)))
    }
}

/// Compiles a case and compares it with its expected program.
pub fn run_case(case: &Case) -> CaseReport {
    let (masked, failure) = match compile_source(&case.input) {
        Ok(program) => compare(&case.expected, &program, &case.config),
        Err(diags) => (0, Some(diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))),
    };
    CaseReport { name: case.name.clone(), masked, failure }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_single_dots_only() {
        let s = split_statements("node(1..3).  a(\"x.y\").\n:~ b. [1@2]\n");
        let texts: Vec<&str> = s.iter().map(|l| l.text.as_str()).collect();
        assert_eq!(texts, vec!["node(1..3).", "a(\"x.y\").", ":~ b. [1@2]"]);
        assert_eq!(s[2].line, 2);
    }

    #[test]
    fn normalization_keeps_word_separation() {
        assert_eq!(normalize(":- not  work_in(N, \"a b\") ."), ":-not work_in(N,\"a b\").");
    }

    #[test]
    fn alpha_renaming() {
        assert_eq!(alpha_normalize("p(X,_X1,_,_foo):-q(X)."), "p(V1,V2,_,_foo):-q(V1).");
        assert_eq!(alpha_normalize("p(A,B)."), alpha_normalize("p(C,D)."));
    }

    #[test]
    fn masks_and_order() {
        let cfg = CaseConfig {
            compare: CompareMode::Alpha,
            exceptions: vec![Exception { line: 2, location: String::new(), reason: "x".into() }],
            ..Default::default()
        };
        assert!(compare("a(X).\nb(1).\nc.", "c.\nb(2).\na(Y).", &cfg).1.is_none());
        let exact = CaseConfig::default();
        assert!(compare("a.\nb.", "b.\na.", &exact).1.is_some());
    }
}
