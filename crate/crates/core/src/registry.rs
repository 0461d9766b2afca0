//! Concept signatures, constants and temporal concepts.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::asp::{Atom, Rule, Term};
use crate::ast::{Operand, TemporalDefinition, TemporalUnit, TermKind, Words};
use crate::error::CnlError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: Words,
    pub key: bool,
    /// Concept of the values held by the attribute, when known.
    pub concept: Option<String>,
    /// Values are rendered as a functional term over the concept's keys.
    pub reference: bool,
}

impl Attribute {
    pub fn plain(name: Words, key: bool) -> Attribute {
        Attribute { name, key, concept: None, reference: false }
    }

    pub fn last_word(&self) -> &str {
        self.name.last().map(String::as_str).unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Temporal {
    pub unit: TemporalUnit,
    /// Label of every value, index `i` at position `i - 1`.
    pub labels: Vec<String>,
    pub start_minutes: u32,
    pub step: u32,
    pub start_date: Option<NaiveDate>,
    pub start_step: i64,
}

impl Temporal {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// 1-based index of a clock time.
    pub fn index_of_time(&self, minutes: u32) -> Option<i64> {
        if self.unit != TemporalUnit::Minutes || minutes < self.start_minutes || !(minutes - self.start_minutes).is_multiple_of(self.step) {
            return None;
        }
        let i = ((minutes - self.start_minutes) / self.step) as usize;
        (i < self.labels.len()).then_some(i as i64 + 1)
    }

    /// 1-based index of a date.
    pub fn index_of_date(&self, date: NaiveDate) -> Option<i64> {
        let start = self.start_date?;
        let i = (date - start).num_days();
        (i >= 0 && (i as usize) < self.labels.len()).then_some(i + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConceptKind {
    Domain,
    Range { from: Term, to: Term },
    List { values: Vec<String> },
    Temporal(Temporal),
    /// Introduced by a membership sentence.
    Implicit,
    /// Introduced by a verb.
    Relation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub predicate: String,
    pub kind: ConceptKind,
    pub attributes: Vec<Attribute>,
}

impl Signature {
    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn keys(&self) -> Vec<usize> {
        (0..self.attributes.len()).filter(|i| self.attributes[*i].key).collect()
    }

    /// Slot filled by a label written after the concept name.
    pub fn label_slot(&self) -> Option<usize> {
        match &self.kind {
            ConceptKind::Domain => {
                let keys = self.keys();
                (keys.len() == 1).then(|| keys[0])
            }
            ConceptKind::List { .. } => Some(1),
            ConceptKind::Range { .. } | ConceptKind::Temporal(_) | ConceptKind::Implicit => Some(0),
            ConceptKind::Relation => None,
        }
    }

    /// Index of an attribute, accepting plural forms and, for a concept
    /// with a single key, the concept's own name for that key.
    pub fn attribute(&self, name: &[String]) -> Option<usize> {
        let norm = |w: &[String]| -> String { w.join(" ") };
        let target = norm(name);
        if let Some(i) = self.attributes.iter().position(|a| norm(&a.name) == target) {
            return Some(i);
        }
        if let Some(i) = self.attributes.iter().position(|a| format!("{}s", norm(&a.name)) == target) {
            return Some(i);
        }
        if predicate_name(name) == self.predicate {
            return self.label_slot();
        }
        None
    }

    pub fn temporal(&self) -> Option<&Temporal> {
        match &self.kind {
            ConceptKind::Temporal(t) => Some(t),
            _ => None,
        }
    }
}

/// Predicate name of a (multi-word) concept: lowercase, joined by `_`.
pub fn predicate_name(words: &[String]) -> String {
    words.iter().map(|w| w.to_lowercase()).collect::<Vec<_>>().join("_")
}

const AUXILIARIES: &[&str] = &["is", "are", "be", "been", "does", "do", "can", "has", "have", "a", "an", "the"];

/// Predicate name of a verb phrase: `is connected to` becomes
/// `connected_to`, `works in` becomes `work_in`.
pub fn normalize_verb(words: &[String], has_object: bool) -> String {
    let mut kept: Vec<String> =
        words.iter().map(|w| w.to_lowercase()).filter(|w| !AUXILIARIES.contains(&w.as_str())).collect();
    let copula = words.first().is_some_and(|w| AUXILIARIES.contains(&w.to_lowercase().as_str()));
    let several = kept.len() > 1;
    if let Some(first) = kept.first_mut() {
        if !copula && (has_object || several) && first.len() > 3 && first.ends_with('s') && !first.ends_with("ss") {
            first.pop();
        }
    }
    kept.join("_")
}

fn clock_label(minutes: u32) -> String {
    format!("{:02}:{:02}", minutes / 60, minutes % 60)
}

pub fn parse_date(text: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(text, "%d/%m/%Y").ok()
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    concepts: BTreeMap<String, Signature>,
    constants: BTreeMap<String, Option<Term>>,
}

impl Registry {
    pub fn new() -> Registry {
        Registry::default()
    }

    pub fn get(&self, predicate: &str) -> Option<&Signature> {
        self.concepts.get(predicate)
    }

    pub fn get_mut(&mut self, predicate: &str) -> Option<&mut Signature> {
        self.concepts.get_mut(predicate)
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Signature> {
        self.concepts.values()
    }

    pub fn is_constant(&self, name: &str) -> bool {
        self.constants.contains_key(name)
    }

    /// Value of a constant: its definition, or its own symbol.
    /// Constants declared without a value, which a solver must receive.
    pub fn open_constants(&self) -> Vec<String> {
        self.constants.iter().filter(|(_, v)| v.is_none()).map(|(k, _)| k.clone()).collect()
    }

    pub fn constant(&self, name: &str) -> Option<Term> {
        self.constants.get(name).map(|v| v.clone().unwrap_or_else(|| Term::Sym(name.to_string())))
    }

    pub fn define_constant(&mut self, name: &str, value: Option<Term>) -> Result<(), CnlError> {
        if let Some(old) = self.constants.get(name) {
            if *old != value {
                return Err(CnlError::ConflictingSignature(name.to_string()));
            }
        }
        self.constants.insert(name.to_string(), value);
        Ok(())
    }

    /// Registers a signature; redefinitions must be identical.
    pub fn insert(&mut self, sig: Signature) -> Result<(), CnlError> {
        if let Some(old) = self.concepts.get(&sig.predicate) {
            if old.kind == ConceptKind::Implicit && sig.kind != ConceptKind::Relation {
                self.concepts.insert(sig.predicate.clone(), sig);
                return Ok(());
            }
            if *old != sig {
                return Err(CnlError::ConflictingSignature(sig.predicate));
            }
            return Ok(());
        }
        self.concepts.insert(sig.predicate.clone(), sig);
        Ok(())
    }

    /// Attribute list for a domain definition. Attributes named after an
    /// already registered concept are references to it.
    pub fn domain_attributes(&self, keys: &[Words], params: &[Words]) -> Vec<Attribute> {
        let make = |w: &Words, key: bool| {
            let p = predicate_name(w);
            match self.concepts.get(&p) {
                Some(s) if s.kind != ConceptKind::Relation => Attribute { name: w.clone(), key, concept: Some(p), reference: true },
                _ => Attribute::plain(w.clone(), key),
            }
        };
        keys.iter().map(|k| make(k, true)).chain(params.iter().map(|p| make(p, false))).collect()
    }

    /// Numeric value of an operand in a definition.
    pub fn definition_term(&self, op: &Operand) -> Result<Term, CnlError> {
        match op {
            Operand::Term(t) => match t.kind {
                TermKind::NumberValue => Ok(Term::Num(t.text.parse().map_err(|_| CnlError::Unsupported(t.text.clone()))?)),
                TermKind::ConstantRef => Ok(self.constant(&t.text).unwrap_or_else(|| Term::Sym(t.text.clone()))),
                TermKind::StringValue if self.is_constant(&t.text) => Ok(self.constant(&t.text).unwrap()),
                _ => Err(CnlError::Unsupported(format!("`{}` in a definition", t.text))),
            },
            other => Err(CnlError::Unsupported(format!("`{other}` in a definition"))),
        }
    }

    fn number(&self, op: &Operand) -> Option<i64> {
        match self.definition_term(op).ok()? {
            Term::Num(n) => Some(n),
            _ => None,
        }
    }

    /// Builds a temporal concept and checks its range.
    pub fn temporal(&self, def: &TemporalDefinition) -> Result<Signature, CnlError> {
        let name = predicate_name(&def.name);
        let mut t = Temporal { unit: def.unit, labels: Vec::new(), start_minutes: 0, step: 1, start_date: None, start_step: 1 };
        match def.unit {
            TemporalUnit::Minutes => {
                let (Operand::Time { minutes: start, .. }, Operand::Time { minutes: end, .. }) = (&def.start, &def.end) else {
                    return Err(CnlError::Unsupported(format!("`{name}` needs clock times")));
                };
                let step = def.step.as_ref().map(|(n, unit)| {
                    if unit.first().is_some_and(|u| u.starts_with("hour")) {
                        n * 60
                    } else {
                        *n
                    }
                });
                let step = step.unwrap_or(1);
                if end <= start {
                    return Err(CnlError::EmptyRange(name));
                }
                if step <= 0 || (end - start) as i64 % step != 0 {
                    return Err(CnlError::MisalignedStep(name));
                }
                t.start_minutes = *start;
                t.step = step as u32;
                t.labels = (0..(end - start) / step as u32).map(|i| clock_label(start + i * step as u32)).collect();
            }
            TemporalUnit::Days => {
                let (Operand::Date { text: s }, Operand::Date { text: e }) = (&def.start, &def.end) else {
                    return Err(CnlError::Unsupported(format!("`{name}` needs dates")));
                };
                let bad = |d: &str| CnlError::Unsupported(format!("invalid date `{d}`"));
                let start = parse_date(s).ok_or_else(|| bad(s))?;
                let end = parse_date(e).ok_or_else(|| bad(e))?;
                if end < start {
                    return Err(CnlError::EmptyRange(name));
                }
                t.start_date = Some(start);
                t.labels = start.iter_days().take_while(|d| *d <= end).map(|d| d.format("%d/%m/%Y").to_string()).collect();
            }
            TemporalUnit::Steps => {
                let (Some(start), Some(end)) = (self.number(&def.start), self.number(&def.end)) else {
                    return Err(CnlError::Unsupported(format!("`{name}` needs numeric bounds")));
                };
                if end < start {
                    return Err(CnlError::EmptyRange(name));
                }
                t.start_step = start;
                t.labels = (start..=end).map(|i| i.to_string()).collect();
            }
        }
        let mut attributes = vec![Attribute::plain(def.name.clone(), true)];
        if def.unit != TemporalUnit::Steps {
            attributes.push(Attribute::plain(vec!["label".into()], false));
        }
        Ok(Signature { predicate: name, kind: ConceptKind::Temporal(t), attributes })
    }

    /// Facts enumerating a concept's values, if it has any.
    pub fn facts(&self, predicate: &str) -> Vec<Rule> {
        let Some(sig) = self.concepts.get(predicate) else { return Vec::new() };
        match &sig.kind {
            ConceptKind::Temporal(t) => (0..t.len())
                .map(|i| {
                    let mut args = vec![Term::Num(if t.unit == TemporalUnit::Steps { t.start_step + i as i64 } else { i as i64 + 1 })];
                    if t.unit != TemporalUnit::Steps {
                        args.push(Term::Str(t.labels[i].clone()));
                    }
                    Rule::fact(Atom::new(predicate, args))
                })
                .collect(),
            ConceptKind::Range { from, to } => {
                vec![Rule::fact(Atom::new(predicate, vec![Term::Range(Box::new(from.clone()), Box::new(to.clone()))]))]
            }
            _ => Vec::new(),
        }
    }

    /// Temporal concept measured in the given unit word (`step`, `days`).
    pub fn temporal_for_unit(&self, unit: &[String]) -> Option<&Signature> {
        let p = predicate_name(unit);
        if let Some(s) = self.concepts.get(&p).or_else(|| p.strip_suffix('s').and_then(|q| self.concepts.get(q))) {
            return Some(s);
        }
        let want = match p.trim_end_matches('s') {
            "step" => TemporalUnit::Steps,
            "minute" => TemporalUnit::Minutes,
            "day" => TemporalUnit::Days,
            _ => return None,
        };
        self.concepts.values().find(|s| s.temporal().is_some_and(|t| t.unit == want))
    }

    /// Concept whose name matches `words`, accepting plurals.
    pub fn lookup(&self, words: &[String]) -> Option<&Signature> {
        let p = predicate_name(words);
        if let Some(s) = self.concepts.get(&p) {
            return Some(s);
        }
        for suffix in ["s", "es"] {
            if let Some(q) = p.strip_suffix(suffix) {
                if let Some(s) = self.concepts.get(q) {
                    return Some(s);
                }
            }
        }
        None
    }

    /// Position (1-based) of a value of a list concept.
    pub fn list_index(&self, predicate: &str, value: &str) -> Option<i64> {
        match &self.concepts.get(predicate)?.kind {
            ConceptKind::List { values } => values.iter().position(|v| v == value).map(|i| i as i64 + 1),
            _ => None,
        }
    }

    /// List concept one of whose values is `value`.
    pub fn list_of_value(&self, value: &str) -> Option<&Signature> {
        self.concepts.values().find(|s| matches!(&s.kind, ConceptKind::List { values } if values.iter().any(|v| v == value)))
    }

    /// Numeric bounds of a range or temporal concept.
    pub fn bounds(&self, predicate: &str) -> Option<(i64, i64)> {
        match &self.concepts.get(predicate)?.kind {
            ConceptKind::Range { from: Term::Num(a), to: Term::Num(b) } => Some((*a, *b)),
            ConceptKind::Temporal(t) if t.unit == TemporalUnit::Steps => Some((t.start_step, t.start_step + t.len() as i64 - 1)),
            ConceptKind::Temporal(t) => Some((1, t.len() as i64)),
            ConceptKind::List { values } => Some((1, values.len() as i64)),
            _ => None,
        }
    }

    /// Functional term standing for an entity of `predicate` with the given
    /// key values: `patient(P)`, `registration(patient(P),OR)`.
    pub fn reference(&self, predicate: &str, keys: Vec<Term>) -> Term {
        Term::Func(predicate.to_string(), keys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Operand, Term as AstTerm};

    fn w(s: &str) -> Words {
        s.split(' ').map(String::from).collect()
    }

    #[test]
    fn verbs_normalize() {
        assert_eq!(normalize_verb(&w("is connected to"), true), "connected_to");
        assert_eq!(normalize_verb(&w("works in"), true), "work_in");
        assert_eq!(normalize_verb(&w("serves"), true), "serve");
        assert_eq!(normalize_verb(&w("be assigned to"), true), "assigned_to");
        assert_eq!(normalize_verb(&w("is working"), false), "working");
        assert_eq!(normalize_verb(&w("has a path to"), true), "path_to");
        assert_eq!(normalize_verb(&w("is payed"), false), "payed");
        assert_eq!(normalize_verb(&w("drink in"), true), "drink_in");
    }

    #[test]
    fn minute_concepts() {
        let reg = Registry::new();
        let def = TemporalDefinition {
            article: None,
            name: w("timeslot"),
            unit: TemporalUnit::Minutes,
            start: Operand::Time { minutes: 450, text: "07:30 AM".into() },
            end: Operand::Time { minutes: 810, text: "01:30 PM".into() },
            step: Some((10, w("minutes"))),
        };
        let sig = reg.temporal(&def).unwrap();
        let t = sig.temporal().unwrap();
        assert_eq!(t.len(), 36);
        assert_eq!(t.labels[35], "13:20");
        assert_eq!(t.index_of_time(680), Some(24));
        assert_eq!(t.index_of_time(685), None);
        assert_eq!(t.index_of_time(810), None);
    }

    #[test]
    fn misaligned_and_empty_ranges() {
        let reg = Registry::new();
        let mut def = TemporalDefinition {
            article: None,
            name: w("slot"),
            unit: TemporalUnit::Minutes,
            start: Operand::Time { minutes: 0, text: "00:00".into() },
            end: Operand::Time { minutes: 25, text: "00:25".into() },
            step: Some((10, w("minutes"))),
        };
        assert_eq!(reg.temporal(&def).unwrap_err(), CnlError::MisalignedStep("slot".into()));
        def.end = Operand::Time { minutes: 0, text: "00:00".into() };
        assert_eq!(reg.temporal(&def).unwrap_err(), CnlError::EmptyRange("slot".into()));
    }

    #[test]
    fn day_concepts() {
        let reg = Registry::new();
        let def = TemporalDefinition {
            article: None,
            name: w("day"),
            unit: TemporalUnit::Days,
            start: Operand::Date { text: "30/12/2023".into() },
            end: Operand::Date { text: "02/01/2024".into() },
            step: None,
        };
        let sig = reg.temporal(&def).unwrap();
        assert_eq!(sig.temporal().unwrap().labels, ["30/12/2023", "31/12/2023", "01/01/2024", "02/01/2024"]);
        let steps = TemporalDefinition {
            unit: TemporalUnit::Steps,
            start: Operand::Term(AstTerm { kind: TermKind::NumberValue, text: "1".into() }),
            end: Operand::Term(AstTerm { kind: TermKind::NumberValue, text: "3".into() }),
            ..def
        };
        let mut reg = Registry::new();
        let sig = reg.temporal(&steps).unwrap();
        reg.insert(sig).unwrap();
        let facts: Vec<String> = reg.facts("day").iter().map(|r| r.to_string()).collect();
        assert_eq!(facts, ["day(1).", "day(2).", "day(3)."]);
    }
}
