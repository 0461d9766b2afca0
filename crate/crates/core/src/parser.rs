//! Recursive-descent parser for CNL propositions.
//!
//! Parsing runs in two passes over the token stream. The first collects a
//! [`Lexicon`] of concept names, constants and enumerated values from the
//! definition sentences; the second parses every proposition, using the
//! lexicon to decide where noun phrases end.

use std::collections::BTreeSet;

use crate::ast::*;
use crate::error::{CnlError, Diagnostic, Span};
use crate::token::{Token, TokenKind};

/// Words that never start or continue a concept name or a verb object.
const STOP: &[&str] = &[
    "a", "an", "the", "every", "any", "with", "that", "where", "such", "and", "or", "also", "is", "are", "be",
    "not", "does", "do", "can", "must", "then", "whenever", "when", "there", "to", "in", "of", "for", "each",
    "have", "has", "between", "equal", "different", "greater", "less", "more", "at", "most", "least", "exactly",
    "after", "before", "one", "respectively", "from", "by", "as", "than", "ranging", "we", "consecutive", "next",
    "previous", "it", "on",
];

const PREPOSITIONS: &[&str] = &["to", "in", "on", "at", "of", "from", "into"];

/// Names known before the main parse.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    pub concepts: BTreeSet<Vec<String>>,
    pub constants: BTreeSet<String>,
    pub values: BTreeSet<String>,
}

fn is_stop(w: &str) -> bool {
    STOP.contains(&w)
}

fn singular(w: &str) -> Option<String> {
    if w.len() > 3 && w.ends_with("es") && !w.ends_with("ses") {
        let s = w[..w.len() - 1].to_string();
        return Some(s);
    }
    (w.len() > 2 && w.ends_with('s') && !w.ends_with("ss")).then(|| w[..w.len() - 1].to_string())
}

impl Lexicon {
    /// Length of the longest known concept name starting at `words`,
    /// accepting a plural last word.
    pub fn match_concept(&self, words: &[String]) -> Option<usize> {
        for len in (1..=words.len().min(4)).rev() {
            let cand = &words[..len];
            if self.concepts.contains(cand) {
                return Some(len);
            }
            let mut alt = cand.to_vec();
            let mut tries = vec![];
            if let Some(s) = singular(&alt[len - 1]) {
                tries.push(s);
            }
            if alt[len - 1].ends_with("es") {
                tries.push(alt[len - 1][..alt[len - 1].len() - 2].to_string());
            }
            for t in tries {
                alt[len - 1] = t;
                if self.concepts.contains(&alt) {
                    return Some(len);
                }
            }
        }
        None
    }

    pub fn is_constant(&self, w: &str) -> bool {
        self.constants.contains(w)
    }

    pub fn is_value(&self, w: &str) -> bool {
        self.values.contains(&w.to_lowercase())
    }

    /// Collects names from the definition sentences of a document.
    pub fn scan(sentences: &[&[Token]]) -> Lexicon {
        let mut lex = Lexicon::default();
        for s in sentences {
            lex.scan_sentence(s);
        }
        lex
    }

    fn scan_sentence(&mut self, s: &[Token]) {
        let lw: Vec<String> = s.iter().map(|t| t.lower()).collect();
        let find = |pat: &[&str]| -> Option<usize> {
            (0..lw.len()).find(|&i| pat.iter().enumerate().all(|(k, p)| lw.get(i + k).is_some_and(|w| w == p)))
        };
        let start = usize::from(matches!(lw.first().map(String::as_str), Some("a" | "an")));
        let name_until = |end: usize| -> Vec<String> { lw[start..end].to_vec() };
        if lw.first().is_some_and(|w| w == "it" || w == "whenever" || w == "every" || w == "there") {
            return;
        }
        if let Some(i) = find(&["is", "a", "constant"]) {
            if i == 1 {
                self.constants.insert(s[0].text.clone());
            }
            return;
        }
        for pat in [&["is", "a", "temporal"][..], &["is", "identified", "by"], &["goes", "from"], &["is", "one", "of"]] {
            if let Some(i) = find(pat) {
                if i > start && lw[start..i].iter().all(|w| s.iter().any(|t| t.lower() == *w && t.kind == TokenKind::Word)) {
                    let name = name_until(i);
                    if name.iter().all(|w| !matches!(w.as_str(), "is" | "where" | "," | "when")) {
                        self.concepts.insert(name);
                        if pat[1] == "one" {
                            self.scan_list_values(&s[i + 3..]);
                        }
                        return;
                    }
                }
            }
        }
        if start == 1 && lw.len() > 2 {
            if let Some(i) = lw.iter().position(|w| w == "has") {
                if i > 1 && lw[1..i].iter().all(|w| !is_stop(w)) {
                    self.concepts.insert(name_until(i));
                    return;
                }
            }
        }
        // `John is a waiter`
        if lw.len() >= 4 && lw[1] == "is" && (lw[2] == "a" || lw[2] == "an") && s[0].kind != TokenKind::Punct {
            let rest: Vec<String> = lw[3..].to_vec();
            if rest.iter().all(|w| s.iter().any(|t| t.kind == TokenKind::Word && t.lower() == *w)) && !rest.is_empty() {
                self.concepts.insert(rest);
                if s[0].kind == TokenKind::Word {
                    self.values.insert(lw[0].clone());
                }
                return;
            }
        }
        // `Waiter John works ...`: a leading word followed by a label.
        if s.len() > 2 && s[0].kind == TokenKind::Word && !is_stop(&lw[0]) {
            let t = &s[1];
            let label = matches!(t.kind, TokenKind::Number | TokenKind::Quoted)
                || (t.kind == TokenKind::Word && t.text.chars().next().is_some_and(char::is_uppercase))
                || (t.kind == TokenKind::Word && self.constants.contains(&t.text));
            if label {
                self.concepts.insert(vec![lw[0].clone()]);
            }
        }
    }

    fn scan_list_values(&mut self, s: &[Token]) {
        for t in s {
            if t.is_word("and") || t.is_word("has") {
                if t.is_word("has") {
                    break;
                }
                continue;
            }
            if t.kind == TokenKind::Word {
                self.values.insert(t.lower());
            }
        }
    }
}

/// Classifies a single CNL word.
///
/// A word is a variable when it has at least one uppercase letter and no
/// lowercase letter; digits are numbers; registered constants are constant
/// references; anything else is a string value.
pub fn classify_term(text: &str, constants: &BTreeSet<String>) -> TermKind {
    let body = text.strip_prefix('-').unwrap_or(text);
    if !body.is_empty() && body.chars().all(|c| c.is_ascii_digit()) {
        return TermKind::NumberValue;
    }
    if text.chars().next().is_some_and(char::is_uppercase)
        && text.chars().any(char::is_uppercase)
        && !text.chars().any(char::is_lowercase)
    {
        return TermKind::Variable;
    }
    if constants.contains(text) {
        return TermKind::ConstantRef;
    }
    TermKind::StringValue
}

/// Minutes since midnight of a `HH:MM [AM|PM]` literal.
pub fn parse_clock(text: &str) -> Option<u32> {
    let mut parts = text.split_whitespace();
    let hm = parts.next()?;
    let suffix = parts.next().map(|s| s.to_ascii_uppercase());
    let (h, m) = hm.split_once(':')?;
    let (mut h, m): (u32, u32) = (h.parse().ok()?, m.parse().ok()?);
    if m >= 60 {
        return None;
    }
    match suffix.as_deref() {
        Some("AM") if (1..=12).contains(&h) => h %= 12,
        Some("PM") if (1..=12).contains(&h) => h = h % 12 + 12,
        None if h < 24 => {}
        _ => return None,
    }
    Some(h * 60 + m)
}

/// Splits tokens into sentences at `.`; a trailing fragment is an error.
pub fn split_sentences(tokens: &[Token]) -> (Vec<&[Token]>, Option<Diagnostic>) {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        if t.is_punct(".") {
            if i > start {
                out.push(&tokens[start..=i]);
            }
            start = i + 1;
        }
    }
    let err = (start < tokens.len()).then(|| {
        let span = tokens[start].span.join(&tokens[tokens.len() - 1].span);
        Diagnostic::new(span, CnlError::UnterminatedProposition)
    });
    (out, err)
}

/// Parses a whole document, collecting every syntax error.
pub fn parse_document(tokens: &[Token]) -> Result<Document, Vec<Diagnostic>> {
    let (sentences, tail) = split_sentences(tokens);
    let lexicon = Lexicon::scan(&sentences);
    let mut errors = Vec::new();
    let mut propositions = Vec::new();
    for s in &sentences {
        match parse_sentence(s, &lexicon) {
            Ok(p) => propositions.push(p),
            Err(e) => errors.push(e),
        }
    }
    errors.extend(tail);
    if errors.is_empty() {
        Ok(Document { propositions })
    } else {
        Err(errors)
    }
}

/// Parses one sentence, including its final `.`.
pub fn parse_sentence(tokens: &[Token], lexicon: &Lexicon) -> Result<Proposition, Diagnostic> {
    let body = match tokens.last() {
        Some(t) if t.is_punct(".") => &tokens[..tokens.len() - 1],
        _ => tokens,
    };
    let span = tokens.first().map(|f| f.span.join(&tokens[tokens.len() - 1].span)).unwrap_or_default();
    let mut p = Parser { t: body, i: 0, lex: lexicon, end_span: tokens.last().map(|t| t.span).unwrap_or_default() };
    let kind = p.proposition()?;
    if p.i < body.len() {
        return Err(p.err("end of proposition"));
    }
    Ok(Proposition { kind, span })
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser<'a> {
    t: &'a [Token],
    i: usize,
    lex: &'a Lexicon,
    end_span: Span,
}

impl<'a> Parser<'a> {
    // -- token helpers ---------------------------------------------------

    fn peek_at(&self, k: usize) -> Option<&'a Token> {
        self.t.get(self.i + k)
    }

    fn word_at(&self, k: usize) -> Option<String> {
        self.peek_at(k).filter(|t| t.kind == TokenKind::Word).map(|t| t.lower())
    }

    fn at(&self, w: &str) -> bool {
        self.at_seq(&[w])
    }

    /// Matches words case-insensitively; `","` matches a comma.
    fn at_seq(&self, seq: &[&str]) -> bool {
        seq.iter().enumerate().all(|(k, w)| match self.peek_at(k) {
            Some(t) if *w == "," => t.is_punct(","),
            Some(t) => t.is_word(w),
            None => false,
        })
    }

    fn eat(&mut self, w: &str) -> bool {
        self.eat_seq(&[w])
    }

    fn eat_seq(&mut self, seq: &[&str]) -> bool {
        if self.at_seq(seq) {
            self.i += seq.len();
            true
        } else {
            false
        }
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.peek_at(0).is_some_and(|t| t.is_punct(p)) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn at_punct(&self, p: &str) -> bool {
        self.peek_at(0).is_some_and(|t| t.is_punct(p))
    }

    fn expect_seq(&mut self, seq: &[&str]) -> PResult<()> {
        if self.eat_seq(seq) {
            Ok(())
        } else {
            Err(self.err(&format!("`{}`", seq.join(" "))))
        }
    }

    fn done(&self) -> bool {
        self.i >= self.t.len()
    }

    fn err(&self, expected: &str) -> Diagnostic {
        let (span, found) = match self.peek_at(0) {
            Some(t) => (t.span, format!("`{}`", t.text)),
            None => (self.end_span, "end of proposition".to_string()),
        };
        Diagnostic::new(span, CnlError::Syntax { expected: expected.to_string(), found })
    }

    fn remaining_words(&self) -> Vec<String> {
        self.t[self.i..].iter().map(|t| t.lower()).collect()
    }

    // -- terms and operands ---------------------------------------------

    /// True when the current token can start a label term.
    fn at_label(&self) -> bool {
        let Some(t) = self.peek_at(0) else { return false };
        match t.kind {
            TokenKind::Number | TokenKind::Time | TokenKind::Date | TokenKind::Quoted => true,
            TokenKind::Punct => t.text == "|" || t.text == "(",
            TokenKind::Word => {
                let w = t.lower();
                if t.text.chars().next().is_some_and(char::is_uppercase) {
                    return !(self.i == 0 && (w == "a" || w == "an"));
                }
                if is_stop(&w) {
                    return false;
                }
                if self.lex.is_constant(&t.text) || self.lex.is_value(&w) {
                    return true;
                }
                let next = self.peek_at(1);
                match next {
                    None => true,
                    Some(n) if n.is_punct(",") => true,
                    Some(n) => {
                        let nw = n.lower();
                        n.kind == TokenKind::Word
                            && matches!(nw.as_str(), "and" | "or" | "for" | "where" | "then" | "whenever" | "such")
                    }
                }
            }
        }
    }

    fn term(&mut self) -> PResult<Operand> {
        let t = self.peek_at(0).ok_or_else(|| self.err("a term"))?;
        let op = match t.kind {
            TokenKind::Number => Operand::Term(Term { kind: TermKind::NumberValue, text: t.text.clone() }),
            TokenKind::Time => {
                let minutes = parse_clock(&t.text).ok_or_else(|| self.err("a valid time"))?;
                Operand::Time { minutes, text: t.text.clone() }
            }
            TokenKind::Date => Operand::Date { text: t.text.clone() },
            TokenKind::Quoted => Operand::Term(Term {
                kind: TermKind::StringValue,
                text: t.text.trim_matches('"').to_string(),
            }),
            TokenKind::Word if !is_stop(&t.lower()) || t.text.chars().next().is_some_and(char::is_uppercase) => {
                Operand::Term(Term { kind: classify_term(&t.text, &self.lex.constants), text: t.text.clone() })
            }
            TokenKind::Punct if t.text == "(" => {
                self.i += 1;
                let inner = self.expr()?;
                if !self.eat_punct(")") {
                    return Err(self.err("`)`"));
                }
                return Ok(Operand::Paren(Box::new(inner)));
            }
            TokenKind::Punct if t.text == "|" => {
                self.i += 1;
                let inner = self.expr()?;
                if !self.eat_punct("|") {
                    return Err(self.err("`|`"));
                }
                return Ok(Operand::Abs(Box::new(inner)));
            }
            TokenKind::Punct if t.text == "-" => {
                if let Some(n) = self.peek_at(1).filter(|n| n.kind == TokenKind::Number) {
                    self.i += 2;
                    return Ok(Operand::Term(Term { kind: TermKind::NumberValue, text: format!("-{}", n.text) }));
                }
                return Err(self.err("a term"));
            }
            _ => return Err(self.err("a term")),
        };
        self.i += 1;
        Ok(op)
    }

    /// Arithmetic over terms: `D+W`, `OR-1`, `|AC+(A-AP)+360|`.
    fn expr(&mut self) -> PResult<Operand> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_at(0) {
                Some(t) if t.is_punct("+") => ArithOp::Add,
                Some(t) if t.is_punct("-") => ArithOp::Sub,
                Some(t) if t.is_punct("*") => ArithOp::Mul,
                _ => break,
            };
            self.i += 1;
            let rhs = self.term()?;
            lhs = Operand::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    /// Operand of a comparison, including `the sum between ...` and
    /// attribute references.
    fn operand(&mut self) -> PResult<Operand> {
        if self.eat_seq(&["the", "sum", "between"]) {
            let mut items = vec![self.operand()?];
            loop {
                if self.eat_seq(&[",", "and"]) || self.eat(",") || self.eat("and") {
                    items.push(self.operand()?);
                } else {
                    break;
                }
            }
            return Ok(Operand::Sum(items));
        }
        if self.eat_seq(&["the", "difference", "between"]) {
            let a = self.operand()?;
            if !(self.eat_seq(&[",", "and"]) || self.eat("and")) {
                return Err(self.err("`and`"));
            }
            let b = self.operand()?;
            return Ok(Operand::Difference(Box::new(a), Box::new(b)));
        }
        if self.at("the") {
            if let Some(op) = self.property()? {
                return Ok(op);
            }
        }
        self.expr()
    }

    /// `the <attribute> [label] of the <concept> <label>` or `the <concept> <label>`.
    fn property(&mut self) -> PResult<Option<Operand>> {
        let words = self.remaining_words();
        // Find `of the <concept> <label>`.
        for k in 2..words.len() {
            if words[k] != "of" || words.get(k + 1).map(String::as_str) != Some("the") {
                continue;
            }
            let Some(len) = self.lex.match_concept(&words[k + 2..]) else { continue };
            let label_pos = self.i + k + 2 + len;
            let Some(lt) = self.t.get(label_pos) else { continue };
            if lt.kind != TokenKind::Word || classify_term(&lt.text, &self.lex.constants) != TermKind::Variable {
                continue;
            }
            self.i += 1;
            let attr_end = self.i + k - 1;
            let mut attribute = Vec::new();
            let mut label = None;
            while self.i < attr_end {
                let t = &self.t[self.i];
                if t.kind == TokenKind::Word && classify_term(&t.text, &self.lex.constants) != TermKind::Variable {
                    attribute.push(t.lower());
                    self.i += 1;
                } else {
                    label = Some(Box::new(self.expr()?));
                }
            }
            self.i += 2;
            let concept = words[k + 2..k + 2 + len].to_vec();
            self.i += len;
            let entity = Box::new(self.term()?);
            return Ok(Some(Operand::Property { attribute, label, concept, entity }));
        }
        if let Some(len) = self.lex.match_concept(&words[1..]) {
            let save = self.i;
            self.i += 1 + len;
            if self.at_label() {
                let label = self.expr()?;
                let concept = words[1..1 + len].to_vec();
                return Ok(Some(Operand::Entity { concept, label: Box::new(label) }));
            }
            self.i = save;
        }
        Ok(None)
    }

    fn compare_word(&mut self) -> Option<CompareWord> {
        let table: &[(&[&str], CompareWord)] = &[
            (&["less", "than", "or", "equal", "to"], CompareWord::LessOrEqual),
            (&["greater", "than", "or", "equal", "to"], CompareWord::GreaterOrEqual),
            (&["equal", "to"], CompareWord::EqualTo),
            (&["different", "from"], CompareWord::DifferentFrom),
            (&["less", "than"], CompareWord::LessThan),
            (&["greater", "than"], CompareWord::GreaterThan),
            (&["more", "than"], CompareWord::MoreThan),
            (&["at", "most"], CompareWord::AtMost),
            (&["at", "least"], CompareWord::AtLeast),
        ];
        for (seq, w) in table {
            if self.eat_seq(seq) {
                return Some(*w);
            }
        }
        None
    }

    fn at_condition(&self) -> bool {
        ["equal", "different", "less", "greater", "more", "after", "before", "between"].iter().any(|w| self.at(w))
            || self.at_seq(&["at", "most"])
            || self.at_seq(&["at", "least"])
            || self.at_seq(&["not", "after"])
            || self.at_seq(&["not", "before"])
            || self.at_seq(&["one", "of"])
    }

    fn condition(&mut self) -> PResult<Condition> {
        if let Some(word) = self.compare_word() {
            let rhs = self.operand()?;
            let unit = self.unit();
            return Ok(Condition::Compare { word, rhs, unit });
        }
        let negated = self.eat("not");
        if self.eat("after") || self.at("before") {
            let order = if self.eat("before") { Order::Before } else { Order::After };
            let rhs = self.operand()?;
            return Ok(Condition::Temporal { negated, order, rhs });
        }
        if negated {
            return Err(self.err("`after` or `before`"));
        }
        if self.eat("between") {
            let low = self.operand()?;
            self.expect_seq(&["and"])?;
            let high = self.operand()?;
            return Ok(Condition::Between { low, high });
        }
        if self.eat_seq(&["one", "of"]) {
            let respectively = self.eat("respectively");
            let values = self.value_list()?;
            return Ok(Condition::OneOf { values, respectively });
        }
        Err(self.err("a comparison"))
    }

    /// Unit word after a compared value (`50 timeslots`).
    fn unit(&mut self) -> Option<Words> {
        let w = self.remaining_words();
        let len = self.lex.match_concept(&w)?;
        self.i += len;
        Some(w[..len].to_vec())
    }

    /// `3,4` / `morning, afternoon, night` / `1, 2 and 3`.
    fn value_list(&mut self) -> PResult<Vec<Operand>> {
        let mut values = vec![self.expr()?];
        loop {
            let comma = self.at_punct(",") && !self.at_seq(&[",", "and"]) && !self.at_seq(&[",", "whenever"]);
            if comma || (self.at("and") && !self.next_is_where_condition(1) && !self.at_seq(&["and", "has"])) {
                self.i += 1;
                values.push(self.expr()?);
            } else {
                break;
            }
        }
        Ok(values)
    }

    /// A where condition starts at offset `k`: `<term> is ...`.
    fn next_is_where_condition(&self, k: usize) -> bool {
        self.peek_at(k).is_some_and(|t| t.kind != TokenKind::Punct) && self.peek_at(k + 1).is_some_and(|t| t.is_word("is"))
    }

    // -- mentions -------------------------------------------------------

    fn determiner(&mut self) -> (Determiner, Option<String>) {
        let Some(w) = self.word_at(0) else { return (Determiner::None, None) };
        let d = match w.as_str() {
            "a" | "an" => Determiner::Indefinite,
            "the" => Determiner::Definite,
            "every" | "any" => Determiner::Every,
            _ => return (Determiner::None, None),
        };
        self.i += 1;
        (d, Some(w))
    }

    /// True when a mention can start at offset `k`.
    fn mention_start(&self, k: usize) -> bool {
        let Some(w) = self.word_at(k) else { return false };
        if matches!(w.as_str(), "a" | "an" | "every" | "any") {
            return true;
        }
        if w == "the" {
            return !matches!(self.word_at(k + 1).as_deref(), Some("next" | "previous"));
        }
        if is_stop(&w) {
            return false;
        }
        let words: Vec<String> = self.t[self.i + k..].iter().map(|t| t.lower()).collect();
        if self.lex.match_concept(&words).is_some() {
            return true;
        }
        // Unknown word directly followed by a label.
        let save = Parser { t: self.t, i: self.i + k + 1, lex: self.lex, end_span: self.end_span };
        let n = self.peek_at(k + 1);
        n.is_some_and(|n| n.kind != TokenKind::Word || n.text.chars().next().is_some_and(char::is_uppercase))
            && save.at_label()
    }

    fn concept_words(&mut self) -> PResult<Words> {
        let words = self.remaining_words();
        if let Some(len) = self.lex.match_concept(&words) {
            self.i += len;
            return Ok(words[..len].to_vec());
        }
        match self.peek_at(0) {
            Some(t) if t.kind == TokenKind::Word && !is_stop(&t.lower()) => {
                self.i += 1;
                Ok(vec![t.lower()])
            }
            _ => Err(self.err("a concept")),
        }
    }

    fn shift(&mut self) -> PResult<Option<Shift>> {
        if !(self.at_seq(&["the", "next"]) || self.at_seq(&["the", "previous"])) {
            return Ok(None);
        }
        self.i += 1;
        let direction = if self.eat("next") {
            Direction::Next
        } else {
            self.i += 1;
            Direction::Previous
        };
        let mut count = None;
        if self.peek_at(0).is_some_and(|t| t.kind == TokenKind::Number) && self.peek_at(1).is_some_and(|t| t.is_word("consecutive")) {
            count = Some(self.term()?);
            self.i += 1;
        }
        let unit = self.concept_words()?;
        Ok(Some(Shift { direction, count, unit }))
    }

    fn at_with(&self) -> bool {
        self.at("with") || self.at_seq(&[",", "with"]) || self.at_seq(&[",", "and", "with"]) || self.at_seq(&["and", "with"])
    }

    fn with_clause(&mut self) -> PResult<WithClause> {
        while !self.eat("with") {
            self.i += 1;
        }
        if self.at_seq(&["the", "next"]) || self.at_seq(&["the", "previous"]) {
            self.i += 1;
            let d = if self.eat("next") {
                Direction::Next
            } else {
                self.i += 1;
                Direction::Previous
            };
            let unit = self.concept_words()?;
            self.expect_seq(&["respect", "to"])?;
            let anchor = self.expr()?;
            return Ok(WithClause { attribute: Vec::new(), value: None, condition: None, shift: Some((d, unit, anchor)) });
        }
        if self.at("a") || self.at("an") {
            self.i += 1;
        }
        let mut attribute = Vec::new();
        while let Some(t) = self.peek_at(0) {
            if t.kind != TokenKind::Word || t.text.chars().next().is_some_and(char::is_uppercase) {
                break;
            }
            let w = t.lower();
            if self.at_condition()
                || matches!(
                    w.as_str(),
                    "with" | "and" | "such" | "then" | "where" | "whenever" | "to" | "in" | "for" | "that" | "or" | "is" | "has" | "have"
                        | "can" | "ranging"
                )
            {
                break;
            }
            attribute.push(w);
            self.i += 1;
        }
        let mut value = None;
        if attribute.len() > 1 {
            let last = attribute.last().unwrap();
            let raw = &self.t[self.i - 1].text;
            if self.lex.is_value(last) || self.lex.is_constant(raw) {
                value = Some(Operand::Term(Term { kind: classify_term(raw, &self.lex.constants), text: raw.clone() }));
                attribute.pop();
            }
        }
        if attribute.is_empty() {
            return Err(self.err("an attribute"));
        }
        if value.is_none()
            && self.peek_at(0).is_some_and(|t| t.kind != TokenKind::Word || t.text.chars().next().is_some_and(char::is_uppercase))
            && !self.at_punct(",")
            && !self.at_punct(")")
        {
            value = Some(self.expr()?);
        }
        let condition = if self.at_condition() { Some(self.condition()?) } else { None };
        Ok(WithClause { attribute, value, condition, shift: None })
    }

    fn mention(&mut self, allow_relation: bool) -> PResult<Mention> {
        let (determiner, article) = self.determiner();
        let concept = self.concept_words()?;
        let label = if self.at_label() { Some(self.expr()?) } else { None };
        let shift = self.shift()?;
        let mut attributes = Vec::new();
        while self.at_with() && !self.at_seq(&["with", "the", "next"]) || self.at_with_shift() {
            attributes.push(self.with_clause()?);
        }
        let mut condition = None;
        if self.at_seq(&["that", "is"]) && !self.at_seq(&["that", "is", "made"]) {
            self.i += 2;
            condition = Some(self.condition()?);
        } else if self.at("before") || self.at("after") || self.at_seq(&["not", "after"]) || self.at_seq(&["not", "before"]) {
            condition = Some(self.condition()?);
        }
        let mut relation = None;
        if allow_relation {
            if let Some(w) = self.word_at(0) {
                let prep = self.word_at(1);
                if !is_stop(&w) && prep.as_deref().is_some_and(|p| PREPOSITIONS.contains(&p)) && self.mention_start(2) {
                    self.i += 2;
                    let m = self.mention(false)?;
                    relation = Some(Box::new((vec![w, prep.unwrap()], m)));
                }
            }
        }
        Ok(Mention { determiner, article, concept, label, shift, attributes, condition, relation })
    }

    fn at_with_shift(&self) -> bool {
        [&["with", "the", "next"][..], &[",", "with", "the", "next"], &[",", "and", "with", "the", "next"], &["and", "with", "the", "next"]]
            .iter()
            .any(|s| self.at_seq(s))
            || [&["with", "the", "previous"][..], &[",", "with", "the", "previous"], &[",", "and", "with", "the", "previous"]]
                .iter()
                .any(|s| self.at_seq(s))
    }

    /// Comma/`and` separated mentions, each starting with an article.
    fn mention_list(&mut self, allow_relation: bool) -> PResult<Vec<Mention>> {
        let mut out = vec![self.mention(allow_relation)?];
        loop {
            let save = self.i;
            if (self.eat_seq(&[",", "and"]) || self.eat(",") || self.eat("and")) && self.mention_start(0) && !self.at("whenever") {
                out.push(self.mention(allow_relation)?);
                continue;
            }
            self.i = save;
            break;
        }
        Ok(out)
    }

    // -- clauses --------------------------------------------------------

    fn verb_words(&mut self) -> Words {
        let mut verb = Vec::new();
        while let Some(t) = self.peek_at(0) {
            if t.kind != TokenKind::Word || t.text.chars().next().is_some_and(char::is_uppercase) {
                break;
            }
            let w = t.lower();
            if matches!(
                w.as_str(),
                "and" | "or" | "where" | "then" | "for" | "whenever" | "when" | "such" | "with" | "that" | "exactly" | "between" | "ranging"
            ) || self.at_seq(&["at", "most"])
                || self.at_seq(&["at", "least"])
                || self.at_seq(&["the", "next"])
                || self.at_seq(&["the", "previous"])
            {
                break;
            }
            if matches!(w.as_str(), "a" | "an") {
                // `has a path to`: an unknown noun followed by a preposition.
                let noun = self.word_at(1);
                let prep = self.word_at(2);
                let known = self.lex.match_concept(&self.remaining_words()[1..]).is_some();
                if let (Some(n), Some(p)) = (noun, prep) {
                    if !known && !is_stop(&n) && PREPOSITIONS.contains(&p.as_str()) {
                        verb.extend([w, n, p]);
                        self.i += 3;
                        continue;
                    }
                }
                break;
            }
            if !verb.is_empty() && !is_stop(&w) && self.mention_start(0) {
                break;
            }
            if verb.is_empty() && self.mention_start(0) && !matches!(w.as_str(), "is" | "are" | "be" | "have" | "has") && !is_stop(&w)
            {
                let words = self.remaining_words();
                if self.lex.match_concept(&words).is_some() {
                    break;
                }
            }
            if w == "the" || (!verb.is_empty() && matches!(w.as_str(), "is" | "are")) {
                break;
            }
            verb.push(w);
            self.i += 1;
        }
        verb
    }

    fn clause(&mut self, subject_required: bool) -> PResult<Clause> {
        let subject = if let Some(s) = self.shift()? {
            Subject::Shift(s)
        } else if subject_required {
            Subject::Mention(self.mention(false)?)
        } else {
            Subject::None
        };
        let mut negated = false;
        let mut verb = Vec::new();
        if self.eat_seq(&["does", "not"]) || self.eat_seq(&["do", "not"]) {
            negated = true;
        } else if self.at_seq(&["is", "not"]) || self.at_seq(&["are", "not"]) {
            verb.push(self.word_at(0).unwrap());
            self.i += 2;
            negated = true;
        }
        verb.extend(self.verb_words());
        if verb.is_empty() {
            return Err(self.err("a verb"));
        }
        let mut objects = Vec::new();
        loop {
            if self.at_seq(&["and", "also"]) {
                break;
            }
            let w = self.word_at(0);
            if let Some(p) = w.as_deref().filter(|p| PREPOSITIONS.contains(p)) {
                if self.mention_start(1) {
                    self.i += 1;
                    let m = self.mention(false)?;
                    objects.push(Object { preposition: Some(p.to_string()), mention: m });
                    continue;
                }
                break;
            }
            if self.mention_start(0) && !self.at("the") {
                objects.push(Object { preposition: None, mention: self.mention(false)? });
                continue;
            }
            if self.at("and") && self.mention_start(1) && !objects.is_empty() {
                self.i += 1;
                let m = self.mention(false)?;
                objects.push(Object { preposition: Some("and".to_string()), mention: m });
                continue;
            }
            break;
        }
        let mut window = None;
        if self.at("for")
            && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Number)
            && self.peek_at(2).is_some_and(|t| t.is_word("consecutive"))
        {
            self.i += 1;
            let n = self.term()?;
            self.i += 1;
            window = Some((n, self.concept_words()?));
        }
        Ok(Clause { subject, negated, verb, objects, pairs: Vec::new(), window })
    }

    fn clauses(&mut self) -> PResult<Vec<Clause>> {
        let mut out = vec![self.clause(true)?];
        while self.eat_seq(&["and", "also"]) {
            out.push(self.clause(true)?);
        }
        Ok(out)
    }

    fn wheres(&mut self) -> PResult<Vec<WhereCondition>> {
        if !(self.eat_seq(&[",", "where"]) || self.eat("where")) {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        loop {
            let subject = self.expr()?;
            self.expect_seq(&["is"])?;
            let condition = self.condition()?;
            out.push(WhereCondition { subject, condition });
            if !self.eat("and") {
                break;
            }
        }
        Ok(out)
    }

    fn whenever(&mut self) -> PResult<Whenever> {
        self.expect_seq(&["whenever", "there", "is"])?;
        let negated = self.eat("not");
        let mentions = self.mention_list(false)?;
        Ok(Whenever { negated, mentions })
    }

    fn whenevers(&mut self) -> PResult<Vec<Whenever>> {
        let mut out = Vec::new();
        loop {
            let save = self.i;
            self.eat_punct(",");
            if self.at("whenever") {
                out.push(self.whenever()?);
            } else {
                self.i = save;
                break;
            }
        }
        Ok(out)
    }

    // -- propositions ---------------------------------------------------

    fn proposition(&mut self) -> PResult<PropositionKind> {
        if self.eat_seq(&["it", "is", "prohibited", "that"]) {
            return Ok(PropositionKind::Prohibited(self.constraint_body()?));
        }
        if self.eat_seq(&["it", "is", "required", "that"]) {
            return Ok(PropositionKind::Required(self.constraint_body()?));
        }
        if self.eat_seq(&["it", "is", "preferred"]) {
            return Ok(PropositionKind::Weak(self.weak()?));
        }
        if self.at("whenever") {
            return Ok(PropositionKind::WheneverThen(self.whenever_then()?));
        }
        if self.at("every") {
            let agent = Agent::Every(self.mention(false)?);
            self.expect_seq(&["can"])?;
            return Ok(PropositionKind::QuantifiedChoice(self.choice_head(agent)?));
        }
        if self.eat_seq(&["there", "is"]) {
            return Ok(PropositionKind::Fact(self.mention(false)?));
        }
        let words = self.remaining_words();
        let has = |pat: &[&str]| (0..words.len()).any(|i| pat.iter().enumerate().all(|(k, p)| words.get(i + k).is_some_and(|w| w == p)));
        if has(&["is", "a", "temporal", "concept"]) {
            return Ok(PropositionKind::Temporal(self.temporal()?));
        }
        if words.len() >= 4 && words[1..4] == ["is", "a", "constant"] {
            let name = self.t[0].text.clone();
            self.i = 4;
            let value = if self.eat_seq(&["equal", "to"]) { Some(self.expr()?) } else { None };
            return Ok(PropositionKind::Constant(ConstantDefinition { name, value }));
        }
        if let Some(k) = self.definition_name_end() {
            let article = matches!(words[0].as_str(), "a" | "an").then(|| words[0].clone());
            let start = usize::from(article.is_some());
            let name = words[start..k].to_vec();
            self.i = k;
            if self.eat_seq(&["is", "identified", "by"]) || self.at("has") {
                return Ok(PropositionKind::Domain(self.domain(article, name)?));
            }
            if self.eat_seq(&["goes", "from"]) {
                return Ok(PropositionKind::Compound(self.range(article, name)?));
            }
            if self.eat_seq(&["is", "one", "of"]) {
                return Ok(PropositionKind::Compound(self.list(article, name)?));
            }
        }
        if words.len() >= 4 && words[1] == "is" && matches!(words[2].as_str(), "a" | "an") && self.t[0].kind != TokenKind::Punct {
            let value = self.term()?;
            self.i += 1;
            let article = self.word_at(0).unwrap();
            self.i += 1;
            let concept = self.remaining_words();
            if concept.iter().all(|w| !is_stop(w)) {
                self.i = self.t.len();
                return Ok(PropositionKind::Enumerative(EnumerativeDefinition::Membership { value, article, concept }));
            }
            self.i = 0;
        }
        let clause = self.clause(true)?;
        let mut when = Vec::new();
        if self.eat("when") {
            when = self.clauses()?;
        }
        let wheres = self.wheres()?;
        Ok(PropositionKind::Enumerative(EnumerativeDefinition::Relation { clause, when, wheres }))
    }

    /// End of the defined name in `[A] name (is identified by|has|goes from|is one of)`.
    fn definition_name_end(&self) -> Option<usize> {
        let words = self.remaining_words();
        let start = usize::from(matches!(words.first().map(String::as_str), Some("a" | "an")));
        for k in start + 1..words.len() {
            let tail = &words[k..];
            let starts = |p: &[&str]| tail.len() >= p.len() && tail.iter().zip(p).all(|(a, b)| a == b);
            if starts(&["is", "identified", "by"]) || starts(&["goes", "from"]) || starts(&["is", "one", "of"]) || (start == 1 && starts(&["has"]))
            {
                let ok = self.t[start..k].iter().all(|t| t.kind == TokenKind::Word) && !is_stop(&words[start]);
                return ok.then_some(k);
            }
            if self.t[k].kind != TokenKind::Word {
                return None;
            }
        }
        None
    }

    fn attribute_name(&mut self) -> PResult<Words> {
        if self.at("a") || self.at("an") {
            self.i += 1;
        }
        let mut w = Vec::new();
        while let Some(t) = self.peek_at(0) {
            if t.kind != TokenKind::Word || (t.is_word("and") && !w.is_empty()) {
                break;
            }
            w.push(t.lower());
            self.i += 1;
        }
        if w.is_empty() {
            return Err(self.err("an attribute name"));
        }
        Ok(w)
    }

    fn domain(&mut self, article: Option<String>, name: Words) -> PResult<DomainDefinition> {
        let mut keys = Vec::new();
        let mut params = Vec::new();
        if self.i > 0 && self.t[self.i - 1].is_word("by") {
            keys.push(self.attribute_name()?);
            while self.eat_seq(&[",", "and", "by"]) || self.eat_seq(&[",", "by"]) || self.eat_seq(&["and", "by"]) {
                keys.push(self.attribute_name()?);
            }
        }
        if self.eat_seq(&[",", "and", "has"]) || self.eat_seq(&["and", "has"]) || self.eat_seq(&[",", "has"]) || self.eat("has") {
            params.push(self.attribute_name()?);
            while self.eat_seq(&[",", "and"]) || self.eat(",") || self.eat("and") {
                params.push(self.attribute_name()?);
            }
        }
        Ok(DomainDefinition { article, name, keys, params })
    }

    fn temporal(&mut self) -> PResult<TemporalDefinition> {
        let article = if self.at("a") || self.at("an") {
            let a = self.word_at(0);
            self.i += 1;
            a
        } else {
            None
        };
        let mut name = Vec::new();
        while !self.at_seq(&["is", "a", "temporal"]) {
            name.push(self.word_at(0).ok_or_else(|| self.err("a concept name"))?);
            self.i += 1;
        }
        self.expect_seq(&["is", "a", "temporal", "concept", "expressed", "in"])?;
        let unit = if self.eat("minutes") {
            TemporalUnit::Minutes
        } else if self.eat("days") {
            TemporalUnit::Days
        } else if self.eat("steps") {
            TemporalUnit::Steps
        } else {
            return Err(self.err("`minutes`, `days` or `steps`"));
        };
        self.expect_seq(&["ranging", "from"])?;
        let start = self.term()?;
        self.expect_seq(&["to"])?;
        let end = self.term()?;
        let mut step = None;
        if self.eat_seq(&["with", "a", "length", "of"]) {
            let n = self.peek_at(0).filter(|t| t.kind == TokenKind::Number).ok_or_else(|| self.err("a number"))?;
            let n: i64 = n.text.parse().map_err(|_| self.err("a number"))?;
            self.i += 1;
            let unit = self.word_at(0).ok_or_else(|| self.err("a unit"))?;
            self.i += 1;
            step = Some((n, vec![unit]));
        }
        Ok(TemporalDefinition { article, name, unit, start, end, step })
    }

    fn range(&mut self, article: Option<String>, name: Words) -> PResult<CompoundDefinition> {
        let from = self.expr()?;
        self.expect_seq(&["to"])?;
        let to = self.expr()?;
        let mut made_of = Vec::new();
        if self.eat_seq(&["and", "is", "made", "of"]) {
            made_of.push(self.concept_words()?);
            while self.eat_seq(&["that", "are", "made", "of"]) {
                made_of.push(self.concept_words()?);
            }
        }
        Ok(CompoundDefinition::Range { article, name, from, to, made_of })
    }

    fn list(&mut self, article: Option<String>, name: Words) -> PResult<CompoundDefinition> {
        let values = self.value_list()?;
        let mut attributes = Vec::new();
        while self.eat_seq(&["and", "has"]) {
            let mut attr = Vec::new();
            while !self.at("that") {
                attr.push(self.word_at(0).ok_or_else(|| self.err("an attribute name"))?);
                self.i += 1;
            }
            self.i += 1;
            if !(self.eat("is") || self.eat("are")) {
                return Err(self.err("`is` or `are`"));
            }
            self.expect_seq(&["equal", "to", "respectively"])?;
            let vals = self.value_list()?;
            attributes.push((attr, vals));
        }
        Ok(CompoundDefinition::List { article, name, values, attributes })
    }

    fn quantity(&mut self) -> PResult<Option<Quantity>> {
        let kind = if self.eat("exactly") {
            QuantityKind::Exactly
        } else if self.eat_seq(&["at", "most"]) {
            QuantityKind::AtMost
        } else if self.eat_seq(&["at", "least"]) {
            QuantityKind::AtLeast
        } else if self.at("between") {
            self.i += 1;
            let a = self.term()?;
            self.expect_seq(&["and"])?;
            let b = self.term()?;
            return Ok(Some(Quantity::Between(a, b)));
        } else {
            return Ok(None);
        };
        Ok(Some(Quantity::Bound(kind, self.term()?)))
    }

    fn choice_head(&mut self, agent: Agent) -> PResult<ChoiceHead> {
        let verb = self.verb_words();
        let mut head = ChoiceHead {
            agent,
            verb,
            quantity: None,
            target: None,
            link: None,
            link_quantity: None,
            objects: Vec::new(),
            alternatives: Vec::new(),
            such_that: Vec::new(),
            for_each: Vec::new(),
            duration: None,
        };
        head.quantity = self.quantity()?;
        if head.verb == ["have"] {
            head.target = Some(self.mention(false)?);
            let link = self.word_at(0).filter(|w| PREPOSITIONS.contains(&w.as_str()));
            if let Some(l) = link {
                self.i += 1;
                head.link = Some(l);
                head.link_quantity = self.quantity()?;
                head.objects = self.mention_list(true)?;
            }
        } else if self.mention_start(0) || (self.word_at(0).is_some() && !self.at("for") && !self.at("such") && !self.done()) {
            head.objects = self.mention_list(true)?;
        }
        loop {
            if self.eat_seq(&[",", "or"]) || self.eat("or") {
                head.alternatives.push(self.mention(false)?);
            } else {
                break;
            }
        }
        if self.eat_seq(&["such", "that", "there", "is"]) {
            head.such_that = self.mention_list(false)?;
        }
        if self.eat_seq(&["for", "each"]) {
            head.for_each.push(self.mention(false)?);
            while self.eat("and") {
                head.for_each.push(self.mention(false)?);
            }
        }
        if self.eat("for") {
            let n = self.expr()?;
            let unit = self.concept_words()?;
            head.duration = Some((n, unit));
        }
        Ok(head)
    }

    fn agent(&mut self) -> PResult<Agent> {
        if self.eat("we") {
            return Ok(Agent::We);
        }
        Ok(Agent::Label(self.expr()?))
    }

    fn whenever_then(&mut self) -> PResult<WheneverThen> {
        let mut whenevers = vec![self.whenever()?];
        whenevers.extend(self.whenevers()?);
        self.eat_punct(",");
        self.expect_seq(&["then"])?;
        let agent = self.agent()?;
        let then = if self.eat_seq(&["must", "have"]) {
            Then::Must { agent, target: self.mention(false)? }
        } else if self.eat("can") {
            Then::Can(self.choice_head(agent)?)
        } else {
            return Err(self.err("`must have` or `can`"));
        };
        Ok(WheneverThen { whenevers, then })
    }

    fn at_aggregate(&self) -> bool {
        ["number", "total", "lowest", "highest"].iter().any(|f| self.at_seq(&["the", f]))
    }

    fn aggregate(&mut self) -> PResult<Aggregate> {
        self.i += 1;
        let function = match self.word_at(0).as_deref() {
            Some("number") => AggregateFunction::Number,
            Some("total") => AggregateFunction::Total,
            Some("lowest") => AggregateFunction::Lowest,
            _ => AggregateFunction::Highest,
        };
        self.i += 1;
        let mut agg = Aggregate {
            function,
            attribute: None,
            counted: None,
            per: None,
            window: None,
            relation: None,
            for_each: Vec::new(),
            such_that: Vec::new(),
        };
        if function == AggregateFunction::Number {
            self.expect_seq(&["of"])?;
            if self.eat_seq(&["occurrences", "between", "each"]) {
                let n = self.term()?;
                let unit = self.mention(false)?;
                agg.window = Some((n, unit));
            } else {
                agg.counted = Some(self.mention(false)?);
            }
        } else if self.eat("of") {
            let mut attr = Vec::new();
            while let Some(w) = self.word_at(0).filter(|w| !matches!(w.as_str(), "in" | "where" | "that")) {
                attr.push(w);
                self.i += 1;
            }
            agg.attribute = Some(attr);
            if self.eat("in") {
                agg.per = Some(self.mention(false)?);
            }
        } else {
            let mut attr = Vec::new();
            while let Some(w) = self.word_at(0).filter(|w| w != "of") {
                attr.push(w);
                self.i += 1;
            }
            self.expect_seq(&["of"])?;
            agg.attribute = Some(attr);
            agg.counted = Some(self.mention(false)?);
        }
        if self.eat_seq(&["that", "are"]) {
            let clause = self.clause(false)?;
            agg.relation = Some(AggregateRelation::That { passive: true, clause });
        } else if self.eat("that") {
            let clause = self.relative_clause()?;
            agg.relation = Some(AggregateRelation::That { passive: false, clause });
        } else if self.eat("where") {
            agg.relation = Some(AggregateRelation::Where(self.clause(true)?));
        }
        if self.eat_seq(&["for", "each"]) {
            agg.for_each.push(self.mention(false)?);
            while self.eat("and") {
                agg.for_each.push(self.mention(false)?);
            }
        }
        Ok(agg)
    }

    /// Relative clause with elided subject, allowing the attribute-pair
    /// form `have position in id S, day D, timeslot TS`.
    fn relative_clause(&mut self) -> PResult<Clause> {
        if self.at("have") || self.at("has") {
            let words = self.remaining_words();
            if let Some(len) = self.lex.match_concept(&words[1..]) {
                let after = self.i + 1 + len;
                let pair_start = self.t.get(after).is_some_and(|t| t.kind == TokenKind::Word && !is_stop(&t.lower()))
                    && self.t.get(after + 1).is_some_and(|t| t.kind != TokenKind::Word || classify_term(&t.text, &self.lex.constants) == TermKind::Variable);
                if pair_start {
                    let verb = vec![words[0].clone()];
                    self.i += 1;
                    let concept = self.concept_words()?;
                    let mut pairs = Vec::new();
                    loop {
                        let mut attr = Vec::new();
                        while let Some(t) = self.peek_at(0).filter(|t| t.kind == TokenKind::Word && !t.text.chars().next().unwrap().is_uppercase()) {
                            attr.push(t.lower());
                            self.i += 1;
                        }
                        let v = self.expr()?;
                        pairs.push((attr, v));
                        if !self.eat(",") {
                            break;
                        }
                    }
                    return Ok(Clause {
                        subject: Subject::None,
                        negated: false,
                        verb,
                        objects: vec![Object { preposition: None, mention: Mention::bare(concept) }],
                        pairs,
                        window: None,
                    });
                }
            }
        }
        self.clause(false)
    }

    fn statement(&mut self) -> PResult<Statement> {
        if self.eat("when") {
            let when = self.clauses()?;
            self.eat_punct(",");
            self.expect_seq(&["then"])?;
            let then = self.clauses()?;
            return Ok(Statement::WhenThen { when, then });
        }
        if self.at_aggregate() {
            let aggregate = self.aggregate()?;
            self.expect_seq(&["is"])?;
            let condition = self.condition()?;
            return Ok(Statement::Aggregate { aggregate, condition });
        }
        let save = self.i;
        let comparison_start = self.at_seq(&["the", "sum", "between"])
            || self.at_seq(&["the", "difference", "between"])
            || (self.peek_at(0).is_some_and(|t| t.kind != TokenKind::Word || classify_term(&t.text, &self.lex.constants) == TermKind::Variable)
                && !self.at_seq(&["the"]));
        if comparison_start || self.at("the") {
            if let Ok(lhs) = self.operand() {
                if (!matches!(lhs, Operand::Term(_)) || comparison_start) && self.eat("is") && self.at_condition() {
                    let condition = self.condition()?;
                    return Ok(Statement::Comparison { lhs, condition });
                }
            }
            self.i = save;
        }
        Ok(Statement::Clauses(self.clauses()?))
    }

    fn constraint_body(&mut self) -> PResult<ConstraintBody> {
        let mut statement = self.statement()?;
        if let Statement::Aggregate { aggregate, .. } = &mut statement {
            if self.eat_seq(&[",", "such", "that", "there", "is"]) || self.eat_seq(&["such", "that", "there", "is"]) {
                aggregate.such_that = self.mention_list(false)?;
            }
        }
        let wheres = self.wheres()?;
        let whenevers = self.whenevers()?;
        Ok(ConstraintBody { statement, wheres, whenevers })
    }

    fn weak(&mut self) -> PResult<WeakConstraint> {
        let preference = if self.eat_seq(&["as", "much", "as", "possible"]) {
            Some(Optimization::Maximize)
        } else if self.eat_seq(&["as", "little", "as", "possible"]) {
            Some(Optimization::Minimize)
        } else {
            None
        };
        self.eat_punct(",");
        self.expect_seq(&["with"])?;
        let priority = if self.eat("low") {
            Priority::Low
        } else if self.eat("medium") {
            Priority::Medium
        } else if self.eat("high") {
            Priority::High
        } else {
            return Err(self.err("`low`, `medium` or `high`"));
        };
        self.expect_seq(&["priority"])?;
        self.eat_punct(",");
        self.expect_seq(&["that"])?;
        let body = if self.at("whenever") {
            let mut whenevers = vec![self.whenever()?];
            whenevers.extend(self.whenevers()?);
            self.eat_punct(",");
            let target = self.operand()?;
            WeakBody::Objective { whenevers, target }
        } else if self.eat_seq(&["the", "difference", "in", "absolute", "value", "between"]) {
            let lhs = self.operand()?;
            if !(self.eat_seq(&[",", "and"]) || self.eat("and")) {
                return Err(self.err("`and`"));
            }
            if !self.at_aggregate() {
                return Err(self.err("an aggregate"));
            }
            let aggregate = self.aggregate()?;
            let range = if self.eat_seq(&["ranging", "between"]) {
                let lo = self.expr()?;
                self.expect_seq(&["and"])?;
                Some((lo, self.expr()?))
            } else {
                None
            };
            WeakBody::AbsDifference { lhs, aggregate, range }
        } else if self.at_aggregate() && !self.aggregate_is_compared() {
            WeakBody::Aggregate(self.aggregate()?)
        } else {
            let mut statement = self.statement()?;
            if let Statement::Aggregate { aggregate, .. } = &mut statement {
                if self.eat_seq(&[",", "such", "that", "there", "is"]) {
                    aggregate.such_that = self.mention_list(false)?;
                }
            }
            let whenevers = self.whenevers()?;
            WeakBody::Statement { statement, whenevers }
        };
        let objective = if self.eat_seq(&["is", "maximized"]) {
            Some(Optimization::Maximize)
        } else if self.eat_seq(&["is", "minimized"]) {
            Some(Optimization::Minimize)
        } else {
            None
        };
        let wheres = self.wheres()?;
        Ok(WeakConstraint { preference, priority, body, objective, wheres })
    }

    /// Looks ahead past an aggregate for `is <comparison>`.
    fn aggregate_is_compared(&mut self) -> bool {
        let save = self.i;
        let compared = self.aggregate().is_ok() && self.eat("is") && self.at_condition();
        self.i = save;
        compared
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::tokenize;

    fn parse(src: &str) -> Document {
        parse_document(&tokenize(src).unwrap()).unwrap_or_else(|e| panic!("{e:?}"))
    }

    #[test]
    fn classify_terms() {
        let mut consts = BTreeSet::new();
        consts.insert("maxHours".to_string());
        assert_eq!(classify_term("MY_VARIABLE", &consts), TermKind::Variable);
        assert_eq!(classify_term("My_String", &consts), TermKind::StringValue);
        assert_eq!(classify_term("P1", &consts), TermKind::Variable);
        assert_eq!(classify_term("1993", &consts), TermKind::NumberValue);
        assert_eq!(classify_term("-3", &consts), TermKind::NumberValue);
        assert_eq!(classify_term("maxHours", &consts), TermKind::ConstantRef);
        assert_eq!(classify_term("spielberg", &consts), TermKind::StringValue);
    }

    #[test]
    fn clock_values() {
        assert_eq!(parse_clock("07:30 AM"), Some(450));
        assert_eq!(parse_clock("12:00 AM"), Some(0));
        assert_eq!(parse_clock("01:30 PM"), Some(810));
        assert_eq!(parse_clock("13:20"), Some(800));
        assert_eq!(parse_clock("13:20 PM"), None);
    }

    #[test]
    fn domain_definition() {
        let d = parse("A movie is identified by an id, and has a title, a director, and a year.");
        let PropositionKind::Domain(d) = &d.propositions[0].kind else { panic!() };
        assert_eq!(d.keys, vec![vec!["id".to_string()]]);
        assert_eq!(d.params.len(), 3);
    }

    #[test]
    fn multiword_attributes() {
        let d = parse("A registration is identified by a patient, and by an order, and has a number of waiting days, a duration of the first phase.");
        let PropositionKind::Domain(d) = &d.propositions[0].kind else { panic!() };
        assert_eq!(d.keys.len(), 2);
        assert_eq!(d.params[0].join(" "), "number of waiting days");
        assert_eq!(d.params[1].join(" "), "duration of the first phase");
    }

    #[test]
    fn syntax_errors_are_collected() {
        let toks = tokenize("A node goes from 1 to 3. Whenever there then. It is required that.").unwrap();
        let errs = parse_document(&toks).unwrap_err();
        assert_eq!(errs.len(), 2);
        assert!(errs.iter().all(|e| e.error.is_syntactic()));
    }

    #[test]
    fn unterminated_proposition() {
        let toks = tokenize("A node goes from 1 to 3. A color is one of red").unwrap();
        let errs = parse_document(&toks).unwrap_err();
        assert_eq!(errs[0].error, CnlError::UnterminatedProposition);
    }

    #[test]
    fn whenever_then_choice() {
        let d = parse("A movie is identified by an id, and has a director.\nA topMovie is identified by an id.\nWhenever there is a movie with director X, with id I then we can have at most 1 topmovie with id I such that there is a movie with id I.");
        let PropositionKind::WheneverThen(w) = &d.propositions[2].kind else { panic!("{:?}", d.propositions[2]) };
        let Then::Can(head) = &w.then else { panic!() };
        assert_eq!(head.target.as_ref().unwrap().concept, vec!["topmovie".to_string()]);
        assert_eq!(head.such_that.len(), 1);
        assert!(matches!(head.quantity, Some(Quantity::Bound(QuantityKind::AtMost, _))));
    }
}
