//! Tokenizer for CNL documents.

use crate::error::{CnlError, Diagnostic, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Number,
    /// `07:30 AM`, `13:20`.
    Time,
    /// `01/01/2022`.
    Date,
    /// Double-quoted string, quotes included in the text.
    Quoted,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text == p
    }

    /// Case-insensitive comparison against a keyword.
    pub fn is_word(&self, w: &str) -> bool {
        self.kind == TokenKind::Word && self.text.eq_ignore_ascii_case(w)
    }

    pub fn lower(&self) -> String {
        self.text.to_lowercase()
    }
}

const PUNCT: &[char] = &[',', '.', '|', '+', '-', '(', ')', '*'];

struct Scanner<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Scanner<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span_from(&self, start: usize, line: usize, column: usize) -> Span {
        Span { start, end: self.pos, line, column }
    }

    fn digits_ahead(&self, from: usize) -> usize {
        self.src[self.pos..].chars().skip(from).take_while(|c| c.is_ascii_digit()).count()
    }

    /// Length in chars of a time literal starting here, if any.
    fn time_len(&self) -> Option<usize> {
        let h = self.digits_ahead(0);
        if !(1..=2).contains(&h) || self.peek_at(h) != Some(':') || self.digits_ahead(h + 1) != 2 {
            return None;
        }
        let mut len = h + 3;
        let rest: String = self.src[self.pos..].chars().skip(len).take(4).collect();
        let spaces = rest.chars().take_while(|c| *c == ' ').count();
        let suffix: String = rest.chars().skip(spaces).take(2).collect();
        let after = self.src[self.pos..].chars().nth(len + spaces + 2);
        if spaces > 0
            && (suffix.eq_ignore_ascii_case("AM") || suffix.eq_ignore_ascii_case("PM"))
            && !after.is_some_and(|c| c.is_alphanumeric())
        {
            len += spaces + 2;
        }
        Some(len)
    }

    fn date_len(&self) -> Option<usize> {
        let d = self.digits_ahead(0);
        if !(1..=2).contains(&d) || self.peek_at(d) != Some('/') {
            return None;
        }
        let m = self.digits_ahead(d + 1);
        if !(1..=2).contains(&m) || self.peek_at(d + 1 + m) != Some('/') {
            return None;
        }
        let y = self.digits_ahead(d + m + 2);
        (y == 4).then_some(d + m + 2 + y)
    }
}

/// Splits a document into tokens. Every illegal character is reported.
pub fn tokenize(source: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let mut s = Scanner { src: source, pos: 0, line: 1, column: 1 };
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    while let Some(c) = s.peek() {
        let (start, line, column) = (s.pos, s.line, s.column);
        if c.is_whitespace() {
            s.bump();
            continue;
        }
        let kind = if c.is_ascii_digit() {
            if let Some(n) = s.time_len() {
                (0..n).for_each(|_| {
                    s.bump();
                });
                TokenKind::Time
            } else if let Some(n) = s.date_len() {
                (0..n).for_each(|_| {
                    s.bump();
                });
                TokenKind::Date
            } else if s.src[s.pos..].chars().take_while(|c| c.is_alphanumeric() || *c == '_').all(|c| c.is_ascii_digit()) {
                while s.peek().is_some_and(|c| c.is_ascii_digit()) {
                    s.bump();
                }
                TokenKind::Number
            } else {
                while s.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
                    s.bump();
                }
                TokenKind::Word
            }
        } else if c.is_alphabetic() || c == '_' {
            while s.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
                s.bump();
            }
            TokenKind::Word
        } else if c == '"' {
            s.bump();
            while let Some(c) = s.bump() {
                if c == '"' {
                    break;
                }
            }
            TokenKind::Quoted
        } else if PUNCT.contains(&c) {
            s.bump();
            TokenKind::Punct
        } else {
            s.bump();
            errors.push(Diagnostic::new(s.span_from(start, line, column), CnlError::IllegalCharacter(c)));
            continue;
        };
        let span = s.span_from(start, line, column);
        tokens.push(Token { kind, text: source[start..s.pos].to_string(), span });
    }
    if errors.is_empty() {
        Ok(tokens)
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn time_and_date_literals() {
        let k = kinds("from 07:00 AM to 01/01/2022.");
        assert_eq!(k[1], (TokenKind::Time, "07:00 AM".into()));
        assert_eq!(k[3], (TokenKind::Date, "01/01/2022".into()));
        assert_eq!(k[4], (TokenKind::Punct, ".".into()));
    }

    #[test]
    fn expressions_split_into_tokens() {
        let k = kinds("|AC+(A-AP)+360| OR-1");
        let texts: Vec<_> = k.iter().map(|(_, t)| t.as_str()).collect();
        assert_eq!(texts, ["|", "AC", "+", "(", "A", "-", "AP", ")", "+", "360", "|", "OR", "-", "1"]);
    }

    #[test]
    fn illegal_characters_are_all_reported() {
        let errs = tokenize("a # b @ c.").unwrap_err();
        assert_eq!(errs.len(), 2);
        assert_eq!(errs[0].span.column, 3);
        assert_eq!(errs[1].error, CnlError::IllegalCharacter('@'));
    }

    #[test]
    fn spans_reconstruct_source() {
        let src = "Node 1 is connected to node X,\n  where X is one of 2, 3.";
        let toks = tokenize(src).unwrap();
        let mut rebuilt = String::new();
        let mut last = 0;
        for t in &toks {
            rebuilt.push_str(&src[last..t.span.start]);
            rebuilt.push_str(&t.text);
            last = t.span.end;
        }
        rebuilt.push_str(&src[last..]);
        assert_eq!(rebuilt, src);
        assert_eq!(toks.last().unwrap().span.line, 2);
    }
}
