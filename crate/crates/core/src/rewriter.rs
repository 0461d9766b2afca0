//! Translation of parsed propositions into ASP statements.
//!
//! Propositions are processed in four phases (definitions, enumerations and
//! facts, choices, constraints) so that signatures are known before they are
//! used; the statements of each proposition are reported in source order.

use std::collections::{BTreeMap, BTreeSet};

use crate::asp::{
    Aggregate as AspAggregate, AggregateElement, AggregateFunction as AspFunction, ArithOp, Atom, ChoiceElement, CompareOp,
    Comparison, Head, Literal, Rule, Statement, Term, WeakConstraint as AspWeak,
};
use crate::ast::*;
use crate::error::{CnlError, Diagnostic};
use crate::registry::{normalize_verb, parse_date, predicate_name, Attribute, ConceptKind, Registry, Signature};
use crate::safety::unsafe_variables;

type R<T> = Result<T, CnlError>;

/// Statements produced for one proposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Translation {
    pub proposition: usize,
    pub statements: Vec<Statement>,
}

fn phase(kind: &PropositionKind) -> u8 {
    match kind {
        PropositionKind::Constant(_) => 0,
        PropositionKind::Domain(_) | PropositionKind::Temporal(_) | PropositionKind::Compound(_) => 1,
        PropositionKind::Enumerative(_) | PropositionKind::Fact(_) => 2,
        PropositionKind::WheneverThen(_) | PropositionKind::QuantifiedChoice(_) => 3,
        PropositionKind::Weak(_) => 5,
        _ => 4,
    }
}

/// Compiles a document. Generated variables are numbered across the hard
/// rules of the document and from 1 in every weak constraint.
pub fn compile_document(doc: &Document) -> Result<(Vec<Translation>, Registry), Vec<Diagnostic>> {
    let mut reg = Registry::new();
    let mut out: Vec<Option<Vec<Statement>>> = vec![None; doc.propositions.len()];
    let mut errors = Vec::new();
    let mut order: Vec<usize> = (0..doc.propositions.len()).collect();
    order.sort_by_key(|i| phase(&doc.propositions[*i].kind));
    for &i in &order {
        let p = &doc.propositions[i];
        match compile_proposition(&mut reg, &p.kind) {
            Ok(stmts) => out[i] = Some(stmts),
            Err(e) => errors.push(Diagnostic::new(p.span, e)),
        }
    }
    if !errors.is_empty() {
        errors.sort_by_key(|d| d.span.start);
        return Err(errors);
    }
    let mut counter = 0;
    let mut result = Vec::new();
    for (i, stmts) in out.into_iter().enumerate() {
        let mut stmts = stmts.unwrap_or_default();
        for s in &mut stmts {
            match s {
                Statement::Weak(_) => {
                    s.renumber(0);
                }
                Statement::Rule(_) => counter += s.renumber(counter),
            }
        }
        result.push(Translation { proposition: i, statements: stmts });
    }
    Ok((result, reg))
}

pub fn compile_proposition(reg: &mut Registry, kind: &PropositionKind) -> R<Vec<Statement>> {
    match kind {
        PropositionKind::Constant(c) => {
            let value = c.value.as_ref().map(|v| reg.definition_term(v)).transpose()?;
            reg.define_constant(&c.name, value)?;
            Ok(Vec::new())
        }
        PropositionKind::Domain(d) => {
            let attributes = reg.domain_attributes(&d.keys, &d.params);
            if attributes.is_empty() {
                return Err(CnlError::Unsupported(format!("`{}` has no attributes", d.name.join(" "))));
            }
            reg.insert(Signature { predicate: predicate_name(&d.name), kind: ConceptKind::Domain, attributes })?;
            Ok(Vec::new())
        }
        PropositionKind::Temporal(t) => {
            let sig = reg.temporal(t)?;
            let name = sig.predicate.clone();
            reg.insert(sig)?;
            Ok(reg.facts(&name).into_iter().map(Statement::Rule).collect())
        }
        PropositionKind::Compound(c) => compound(reg, c),
        PropositionKind::Enumerative(e) => enumerative(reg, e),
        PropositionKind::Fact(m) => {
            let mut cx = Ctx::new(reg);
            let out = cx.mention(m, true)?;
            let id = out.entity.ok_or_else(|| CnlError::UnknownConcept(predicate_name(&m.concept)))?;
            cx.check_ground(id)?;
            let atom = cx.entity_atom(id);
            Ok(vec![Statement::Rule(Rule::fact(atom))])
        }
        PropositionKind::WheneverThen(w) => {
            let mut cx = Ctx::new(reg);
            cx.whenevers(&w.whenevers)?;
            match &w.then {
                Then::Must { agent, target } => {
                    let agent = cx.agent(agent)?;
                    let out = cx.mention(target, true)?;
                    let id = out.entity.ok_or_else(|| CnlError::UnknownConcept(predicate_name(&target.concept)))?;
                    if let Some(a) = agent {
                        cx.fill_entity(id, &[a], &mut Vec::new())?;
                    }
                    cx.cmps.extend(out.cmps.into_iter().map(Literal::Cmp));
                    let head = Head::Disjunction(vec![cx.entity_atom(id)]);
                    let body = cx.body();
                    Ok(vec![cx.finish(Statement::Rule(Rule { head, body }))?])
                }
                Then::Can(head) => {
                    let agent = cx.agent(&head.agent)?;
                    cx.choice(head, agent)
                }
            }
        }
        PropositionKind::QuantifiedChoice(head) => {
            let mut cx = Ctx::new(reg);
            let agent = cx.agent(&head.agent)?;
            cx.choice(head, agent)
        }
        PropositionKind::Prohibited(body) => constraint(reg, body, false),
        PropositionKind::Required(body) => constraint(reg, body, true),
        PropositionKind::Weak(w) => weak(reg, w),
    }
}

fn number_or_string(text: &str) -> Term {
    match text.parse::<i64>() {
        Ok(n) => Term::Num(n),
        Err(_) => Term::Str(string_value(text)),
    }
}

/// Capitalized names become lowercase strings (`John` is `"john"`).
fn string_value(text: &str) -> String {
    if text.chars().next().is_some_and(char::is_uppercase) {
        text.to_lowercase()
    } else {
        text.to_string()
    }
}

fn compound(reg: &mut Registry, c: &CompoundDefinition) -> R<Vec<Statement>> {
    match c {
        CompoundDefinition::Range { name, from, to, .. } => {
            let (from, to) = (reg.definition_term(from)?, reg.definition_term(to)?);
            if let (Term::Num(a), Term::Num(b)) = (&from, &to) {
                if b < a {
                    return Err(CnlError::EmptyRange(predicate_name(name)));
                }
            }
            let predicate = predicate_name(name);
            reg.insert(Signature {
                predicate: predicate.clone(),
                kind: ConceptKind::Range { from, to },
                attributes: vec![Attribute::plain(name.clone(), true)],
            })?;
            Ok(reg.facts(&predicate).into_iter().map(Statement::Rule).collect())
        }
        CompoundDefinition::List { name, values, attributes, .. } => {
            let predicate = predicate_name(name);
            let names: Vec<String> = values.iter().map(|v| v.to_string()).collect();
            let mut attrs = vec![Attribute::plain(vec!["order".into()], true), Attribute::plain(name.clone(), false)];
            for (a, vals) in attributes {
                if vals.len() != values.len() {
                    return Err(CnlError::LengthMismatch { expected: values.len(), found: vals.len() });
                }
                attrs.push(Attribute::plain(a.clone(), false));
            }
            reg.insert(Signature { predicate: predicate.clone(), kind: ConceptKind::List { values: names.clone() }, attributes: attrs })?;
            let mut out = Vec::new();
            for (i, v) in names.iter().enumerate() {
                let mut args = vec![Term::Num(i as i64 + 1), Term::Str(string_value(v))];
                for (_, vals) in attributes {
                    let t = match &vals[i] {
                        Operand::Term(t) if t.kind == TermKind::ConstantRef => reg.constant(&t.text).unwrap(),
                        other => number_or_string(&other.to_string()),
                    };
                    args.push(t);
                }
                out.push(Statement::Rule(Rule::fact(Atom::new(&predicate, args))));
            }
            Ok(out)
        }
    }
}

fn enumerative(reg: &mut Registry, e: &EnumerativeDefinition) -> R<Vec<Statement>> {
    match e {
        EnumerativeDefinition::Membership { value, concept, .. } => {
            let predicate = predicate_name(concept);
            if reg.get(&predicate).is_none() {
                reg.insert(Signature {
                    predicate: predicate.clone(),
                    kind: ConceptKind::Implicit,
                    attributes: vec![Attribute::plain(concept.clone(), true)],
                })?;
            }
            let sig = reg.get(&predicate).unwrap().clone();
            let slot = sig.label_slot().ok_or_else(|| CnlError::Unsupported(format!("`{predicate}` has several keys")))?;
            let mut cx = Ctx::new(reg);
            let t = cx.term(value, None)?;
            let id = cx.new_entity(&predicate)?;
            cx.set_slot(id, &[slot], t)?;
            cx.check_ground(id)?;
            Ok(vec![Statement::Rule(Rule::fact(cx.entity_atom(id)))])
        }
        EnumerativeDefinition::Relation { clause, when, wheres } => {
            let (substs, rest) = expand_wheres(clause_text(clause, when), wheres)?;
            let mut out = Vec::new();
            for subst in substs {
                let mut cx = Ctx::new(reg);
                cx.wsub = subst;
                for c in when {
                    let mut lits = Vec::new();
                    cx.clause(c, false, None, &[], None, &mut lits)?;
                    cx.items.extend(lits);
                }
                let mut head = Vec::new();
                cx.prev_subject = None;
                cx.clause(clause, false, None, &[], None, &mut head)?;
                for w in &rest {
                    let lhs = cx.term(&w.subject, None)?;
                    for c in cx.condition(lhs, &w.condition, None)? {
                        cx.tail.push(Literal::Cmp(c));
                    }
                }
                let head_atom = match head.pop() {
                    Some(Literal::Pos(a)) => a,
                    _ => return Err(CnlError::Unsupported("negated or aggregate head".into())),
                };
                cx.items.extend(head);
                let body = cx.body();
                if body.is_empty() {
                    let vars: Vec<Term> = head_atom.args.iter().flat_map(|t| t.variables()).collect();
                    if let Some(v) = vars.iter().find(|v| !cx.is_lazy(v)) {
                        return Err(CnlError::NonGroundFact(v.to_string()));
                    }
                    if !vars.is_empty() {
                        return Err(CnlError::NonGroundFact("_".into()));
                    }
                }
                out.push(cx.finish(Statement::Rule(Rule { head: Head::Disjunction(vec![head_atom]), body }))?);
            }
            Ok(out)
        }
    }
}

fn clause_text(clause: &Clause, when: &[Clause]) -> String {
    let mut s = clause.to_string();
    for c in when {
        s.push(' ');
        s.push_str(&c.to_string());
    }
    s
}

fn words_of(text: &str) -> Vec<&str> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_')).filter(|w| !w.is_empty()).collect()
}

type Subst = BTreeMap<String, Operand>;

/// Splits where conditions into substitutions (from `is one of`) and the
/// remaining conditions. Lists are zipped when marked `respectively` or of
/// equal length, and combined otherwise.
fn expand_wheres(text: String, wheres: &[WhereCondition]) -> R<(Vec<Subst>, Vec<WhereCondition>)> {
    let words = words_of(&text);
    let mut lists: Vec<(String, Vec<Operand>, bool)> = Vec::new();
    let mut rest = Vec::new();
    for w in wheres {
        let var = w.subject.variable().map(str::to_string);
        if let Some(v) = &var {
            if !words.contains(&v.as_str()) {
                return Err(CnlError::UnboundWhereVariable(v.clone()));
            }
        }
        match (&w.condition, var) {
            (Condition::OneOf { values, respectively }, Some(v)) => lists.push((v, values.clone(), *respectively)),
            (Condition::OneOf { .. }, None) => return Err(CnlError::Unsupported("`is one of` on an expression".into())),
            _ => rest.push(w.clone()),
        }
    }
    if lists.is_empty() {
        return Ok((vec![Subst::new()], rest));
    }
    let zip = lists.iter().any(|l| l.2) || lists.iter().all(|l| l.1.len() == lists[0].1.len());
    let mut out = Vec::new();
    if zip && lists.len() > 1 {
        let n = lists[0].1.len();
        if let Some(bad) = lists.iter().find(|l| l.1.len() != n) {
            return Err(CnlError::LengthMismatch { expected: n, found: bad.1.len() });
        }
        for i in 0..n {
            out.push(lists.iter().map(|(v, vals, _)| (v.clone(), vals[i].clone())).collect());
        }
    } else {
        out.push(Subst::new());
        for (v, vals, _) in &lists {
            let mut next = Vec::new();
            for s in &out {
                for val in vals {
                    let mut s2: Subst = s.clone();
                    s2.insert(v.clone(), val.clone());
                    next.push(s2);
                }
            }
            out = next;
        }
    }
    Ok((out, rest))
}

fn statement_text(s: &Statement_) -> String {
    s.to_string()
}

type Statement_ = crate::ast::Statement;

fn compare_op(word: CompareWord) -> CompareOp {
    match word {
        CompareWord::EqualTo => CompareOp::Eq,
        CompareWord::DifferentFrom => CompareOp::Ne,
        CompareWord::LessThan => CompareOp::Lt,
        CompareWord::GreaterThan | CompareWord::MoreThan => CompareOp::Gt,
        CompareWord::AtMost | CompareWord::LessOrEqual => CompareOp::Le,
        CompareWord::AtLeast | CompareWord::GreaterOrEqual => CompareOp::Ge,
    }
}

fn constraint(reg: &mut Registry, body: &ConstraintBody, required: bool) -> R<Vec<Statement>> {
    let mut text = statement_text(&body.statement);
    for w in &body.whenevers {
        text.push(' ');
        text.push_str(&w.to_string());
    }
    let (substs, rest) = expand_wheres(text, &body.wheres)?;
    let mut out = Vec::new();
    for subst in substs {
        let mut cx = Ctx::new(reg);
        cx.wsub = subst;
        cx.where_between(&rest)?;
        cx.whenevers(&body.whenevers)?;
        cx.statement(&body.statement, required)?;
        cx.where_comparisons(&rest)?;
        let body = cx.body();
        out.push(cx.finish(Statement::Rule(Rule::constraint(body)))?);
    }
    Ok(out)
}

fn weak(reg: &mut Registry, w: &WeakConstraint) -> R<Vec<Statement>> {
    let direction = match (w.preference, w.objective) {
        (Some(a), Some(b)) if a != b => return Err(CnlError::ConflictingDirections),
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => Optimization::Maximize,
    };
    let sign = |t: Term| if direction == Optimization::Maximize { Term::Neg(Box::new(t)) } else { t };
    let text = match &w.body {
        WeakBody::Aggregate(a) => a.to_string(),
        WeakBody::AbsDifference { lhs, aggregate, .. } => format!("{lhs} {aggregate}"),
        WeakBody::Statement { statement, whenevers } => {
            let mut s = statement.to_string();
            whenevers.iter().for_each(|x| s.push_str(&format!(" {x}")));
            s
        }
        WeakBody::Objective { whenevers, target } => {
            let mut s = target.to_string();
            whenevers.iter().for_each(|x| s.push_str(&format!(" {x}")));
            s
        }
    };
    let (substs, rest) = expand_wheres(text, &w.wheres)?;
    let level = w.priority.level();
    let mut out = Vec::new();
    for subst in substs {
        let mut cx = Ctx::new(reg);
        cx.wsub = subst;
        cx.where_between(&rest)?;
        let weight = match &w.body {
            WeakBody::Aggregate(a) => {
                let g = cx.gen(false, None);
                let (pre, lit) = cx.aggregate(a, CompareOp::Eq, g.clone())?;
                cx.main.extend(pre);
                cx.main.push(lit);
                sign(g)
            }
            WeakBody::AbsDifference { lhs, aggregate, range } => {
                let total = cx.gen(false, None);
                let (pre, lit) = cx.aggregate(aggregate, CompareOp::Eq, total.clone())?;
                cx.main.extend(pre);
                cx.main.push(lit);
                if let Some((lo, hi)) = range {
                    let lo = cx.term(lo, None)?;
                    let hi = cx.term(hi, None)?;
                    cx.main.push(Literal::Cmp(Comparison::new(CompareOp::Ge, total.clone(), lo)));
                    cx.main.push(Literal::Cmp(Comparison::new(CompareOp::Le, total.clone(), hi)));
                }
                let lhs = cx.term(lhs, None)?;
                let res = cx.gen(false, None);
                let diff = Term::Abs(Box::new(Term::arith(ArithOp::Sub, lhs, total)));
                cx.main.push(Literal::Cmp(Comparison::new(CompareOp::Eq, res.clone(), diff)));
                sign(res)
            }
            WeakBody::Statement { statement, whenevers } => {
                cx.whenevers(whenevers)?;
                cx.statement(statement, false)?;
                sign(Term::Num(1))
            }
            WeakBody::Objective { whenevers, target } => {
                cx.whenevers(whenevers)?;
                let t = cx.operand(target, None)?;
                sign(t)
            }
        };
        let weight = match weight {
            Term::Neg(b) if matches!(*b, Term::Num(_)) => match *b {
                Term::Num(n) => Term::Num(-n),
                _ => unreachable!(),
            },
            other => other,
        };
        cx.where_comparisons(&rest)?;
        let body = cx.body();
        out.push(cx.finish(Statement::Weak(AspWeak { body, weight, level, terms: Vec::new() }))?);
    }
    Ok(out)
}

/// A value placed in an argument position, with the concept it belongs to.
#[derive(Debug, Clone)]
struct Filler {
    concept: Option<String>,
    term: Term,
}

#[derive(Debug, Clone)]
struct Entity {
    concept: String,
    slots: Vec<Term>,
    explicit: Vec<bool>,
}

#[derive(Debug, Default)]
struct MentionOut {
    value: Option<Term>,
    concept: Option<String>,
    entity: Option<usize>,
    atom: Option<Atom>,
    cmps: Vec<Comparison>,
    extras: Vec<Filler>,
}

impl MentionOut {
    fn filler(&self) -> Filler {
        Filler { concept: self.concept.clone(), term: self.value.clone().unwrap_or(Term::Anon) }
    }
}

struct Ctx<'r> {
    reg: &'r mut Registry,
    next_gen: u32,
    lazy: BTreeSet<u32>,
    unify: BTreeMap<u32, Term>,
    wsub: Subst,
    entities: Vec<Entity>,
    labels: BTreeMap<String, usize>,
    binders: BTreeMap<Term, String>,
    angles: Vec<Term>,
    last: BTreeMap<String, (Term, i64)>,
    prev_subject: Option<Filler>,
    between: BTreeMap<String, (Operand, Operand)>,
    positional: Vec<(Term, Term, String)>,
    prefix: Vec<Literal>,
    items: Vec<Literal>,
    cmps: Vec<Literal>,
    main: Vec<Literal>,
    tail: Vec<Literal>,
}

fn is_angle(attr: &Attribute) -> bool {
    attr.last_word() == "angle" || attr.concept.as_deref() == Some("angle")
}

/// Orders comparisons so that one constraining a variable precedes those
/// using it as a bound; ties keep the given order.
fn topological(cmps: Vec<Comparison>) -> Vec<Comparison> {
    let mut rest = cmps;
    let mut out = Vec::new();
    while !rest.is_empty() {
        let pick = (0..rest.len())
            .find(|&i| {
                let rhs = rest[i].rhs.variables();
                !rest.iter().enumerate().any(|(j, c)| j != i && rhs.contains(&c.lhs) && !rest[i].rhs.variables().is_empty() && c.lhs != rest[i].lhs)
            })
            .unwrap_or(0);
        out.push(rest.remove(pick));
    }
    out
}

impl<'r> Ctx<'r> {
    fn new(reg: &'r mut Registry) -> Ctx<'r> {
        Ctx {
            reg,
            next_gen: 0,
            lazy: BTreeSet::new(),
            unify: BTreeMap::new(),
            wsub: Subst::new(),
            entities: Vec::new(),
            labels: BTreeMap::new(),
            binders: BTreeMap::new(),
            angles: Vec::new(),
            last: BTreeMap::new(),
            prev_subject: None,
            between: BTreeMap::new(),
            positional: Vec::new(),
            prefix: Vec::new(),
            items: Vec::new(),
            cmps: Vec::new(),
            main: Vec::new(),
            tail: Vec::new(),
        }
    }

    fn gen(&mut self, lazy: bool, binder: Option<&str>) -> Term {
        self.next_gen += 1;
        if lazy {
            self.lazy.insert(self.next_gen);
        }
        let t = Term::Gen(self.next_gen);
        if let Some(b) = binder {
            self.binders.insert(t.clone(), b.to_string());
        }
        t
    }

    fn is_lazy(&self, t: &Term) -> bool {
        matches!(t, Term::Gen(n) if self.lazy.contains(n))
    }

    fn sig(&self, predicate: &str) -> R<Signature> {
        self.reg.get(predicate).cloned().ok_or_else(|| CnlError::UnknownConcept(predicate.to_string()))
    }

    fn body(&mut self) -> Vec<Literal> {
        let mut b = std::mem::take(&mut self.prefix);
        b.append(&mut self.items);
        b.append(&mut self.cmps);
        b.append(&mut self.main);
        b.append(&mut self.tail);
        b
    }

    // -- terms ------------------------------------------------------------

    fn minutes_concept(&self, hint: Option<&str>) -> Option<Signature> {
        if let Some(s) = hint.and_then(|h| self.reg.get(h)).filter(|s| s.temporal().is_some_and(|t| t.unit == TemporalUnit::Minutes)) {
            return Some(s.clone());
        }
        let all: Vec<&Signature> = self.reg.concepts().filter(|s| s.temporal().is_some_and(|t| t.unit == TemporalUnit::Minutes)).collect();
        (all.len() == 1).then(|| all[0].clone())
    }

    fn days_concept(&self, hint: Option<&str>) -> Option<Signature> {
        if let Some(s) = hint.and_then(|h| self.reg.get(h)).filter(|s| s.temporal().is_some_and(|t| t.unit == TemporalUnit::Days)) {
            return Some(s.clone());
        }
        let all: Vec<&Signature> = self.reg.concepts().filter(|s| s.temporal().is_some_and(|t| t.unit == TemporalUnit::Days)).collect();
        (all.len() == 1).then(|| all[0].clone())
    }

    fn term(&mut self, op: &Operand, hint: Option<&str>) -> R<Term> {
        Ok(match op {
            Operand::Term(t) => match t.kind {
                TermKind::Variable => match self.wsub.get(&t.text).cloned() {
                    Some(v) => self.term(&v, hint)?,
                    None => Term::Var(t.text.clone()),
                },
                TermKind::NumberValue => Term::Num(t.text.parse().map_err(|_| CnlError::Unsupported(t.text.clone()))?),
                TermKind::ConstantRef => self.reg.constant(&t.text).unwrap_or_else(|| Term::Sym(t.text.clone())),
                TermKind::StringValue => match self.reg.constant(&t.text) {
                    Some(c) => c,
                    None => Term::Str(string_value(&t.text)),
                },
            },
            Operand::Time { minutes, text } => {
                let sig = self.minutes_concept(hint).ok_or_else(|| CnlError::UnknownConcept(format!("time {text}")))?;
                let idx = sig.temporal().unwrap().index_of_time(*minutes);
                Term::Num(idx.ok_or_else(|| CnlError::LabelOutOfRange { concept: sig.predicate.clone(), label: text.clone() })?)
            }
            Operand::Date { text } => {
                let sig = self.days_concept(hint).ok_or_else(|| CnlError::UnknownConcept(format!("date {text}")))?;
                let idx = parse_date(text).and_then(|d| sig.temporal().unwrap().index_of_date(d));
                Term::Num(idx.ok_or_else(|| CnlError::LabelOutOfRange { concept: sig.predicate.clone(), label: text.clone() })?)
            }
            Operand::Binary { op, lhs, rhs } => Term::arith(*op, self.term(lhs, hint)?, self.term(rhs, hint)?),
            Operand::Paren(e) => Term::Paren(Box::new(self.term(e, hint)?)),
            Operand::Abs(e) => Term::Abs(Box::new(self.term(e, hint)?)),
            Operand::Sum(items) => {
                let mut it = items.iter();
                let first = it.next().ok_or_else(|| CnlError::Unsupported("empty sum".into()))?;
                let mut acc = self.operand(first, hint)?;
                for i in it {
                    let t = self.operand(i, hint)?;
                    acc = Term::arith(ArithOp::Add, acc, t);
                }
                acc
            }
            Operand::Difference(a, b) => {
                let a = self.operand(a, hint)?;
                let b = self.operand(b, hint)?;
                Term::arith(ArithOp::Sub, a, b)
            }
            Operand::Property { .. } | Operand::Entity { .. } => self.operand(op, hint)?,
        })
    }

    /// Like [`Ctx::term`], resolving attribute references to entities.
    fn operand(&mut self, op: &Operand, hint: Option<&str>) -> R<Term> {
        match op {
            Operand::Property { attribute, label, concept, entity } => {
                let id = self.entity_of(entity, concept)?;
                let path = self.resolve(&self.entities[id].concept.clone(), attribute)?.ok_or_else(|| CnlError::UnknownAttribute {
                    concept: self.entities[id].concept.clone(),
                    attribute: attribute.join(" "),
                })?;
                let inner = self.inner(&self.slot_term(id, &path));
                match label {
                    Some(l) => {
                        let lt = self.term(l, hint)?;
                        self.unify_terms(&inner, &lt);
                        Ok(lt)
                    }
                    None => Ok(inner),
                }
            }
            Operand::Entity { concept, label } => {
                let id = self.entity_of(label, concept)?;
                Ok(self.reference_of(id))
            }
            other => self.term(other, hint),
        }
    }

    fn entity_of(&self, label: &Operand, concept: &[String]) -> R<usize> {
        let name = label.to_string();
        self.labels.get(&name).copied().ok_or_else(|| CnlError::UndefinedSignature(format!("{} {name}", concept.join(" "))))
    }

    fn unify_terms(&mut self, slot: &Term, value: &Term) {
        if slot == value {
            return;
        }
        if let Term::Gen(g) = slot {
            self.unify.insert(*g, value.clone());
        }
    }

    /// Unwraps a reference to a single-key concept (`time(T)` gives `T`).
    fn inner(&self, t: &Term) -> Term {
        match t {
            Term::Func(name, args) if args.len() == 1 && self.reg.get(name).is_some() => self.inner(&args[0]),
            other => other.clone(),
        }
    }

    // -- entities -----------------------------------------------------------

    fn default_slot(&mut self, attr: &Attribute, depth: usize) -> R<Term> {
        if attr.reference && depth < 8 {
            let c = attr.concept.clone().unwrap();
            let sig = self.sig(&c)?;
            let mut keys = Vec::new();
            for k in sig.keys() {
                keys.push(self.default_slot(&sig.attributes[k], depth + 1)?);
            }
            return Ok(Term::Func(c, keys));
        }
        Ok(self.gen(true, attr.concept.as_deref()))
    }

    fn new_entity(&mut self, concept: &str) -> R<usize> {
        let sig = self.sig(concept)?;
        let mut slots = Vec::new();
        for a in &sig.attributes {
            slots.push(self.default_slot(a, 0)?);
        }
        let n = slots.len();
        self.entities.push(Entity { concept: concept.to_string(), slots, explicit: vec![false; n] });
        Ok(self.entities.len() - 1)
    }

    fn entity_atom(&self, id: usize) -> Atom {
        let e = &self.entities[id];
        Atom::new(&e.concept, e.slots.clone())
    }

    fn reference_of(&self, id: usize) -> Term {
        let e = &self.entities[id];
        let sig = self.reg.get(&e.concept).unwrap();
        match sig.label_slot() {
            Some(s) if sig.keys().len() <= 1 => self.inner(&e.slots[s]),
            _ => Term::Func(e.concept.clone(), sig.keys().iter().map(|k| e.slots[*k].clone()).collect()),
        }
    }

    /// Attribute path for `words` in `concept`, following references for
    /// multi-word names such as `registration patient`.
    fn resolve(&self, concept: &str, words: &[String]) -> R<Option<Vec<usize>>> {
        let sig = self.sig(concept)?;
        if let Some(i) = sig.attribute(words) {
            return Ok(Some(vec![i]));
        }
        for k in 1..words.len() {
            if let Some(i) = sig.attribute(&words[..k]) {
                let a = &sig.attributes[i];
                if a.reference {
                    let sub = self.sig(a.concept.as_deref().unwrap())?;
                    if let Some(j) = sub.attribute(&words[k..]) {
                        if let Some(pos) = sub.keys().iter().position(|x| *x == j) {
                            return Ok(Some(vec![i, pos]));
                        }
                    }
                }
            }
        }
        Ok(None)
    }

    fn attr_at(&self, concept: &str, path: &[usize]) -> R<Attribute> {
        let sig = self.sig(concept)?;
        let a = sig.attributes[path[0]].clone();
        if path.len() == 1 {
            return Ok(a);
        }
        let sub = self.sig(a.concept.as_deref().unwrap())?;
        let k = sub.keys()[path[1]];
        Ok(sub.attributes[k].clone())
    }

    fn slot_term(&self, id: usize, path: &[usize]) -> Term {
        let t = &self.entities[id].slots[path[0]];
        match (path.len(), t) {
            (1, _) => t.clone(),
            (_, Term::Func(_, args)) => args[path[1]].clone(),
            _ => t.clone(),
        }
    }

    /// Wraps a plain value for a reference attribute.
    fn wrap(&self, attr: &Attribute, t: Term) -> R<Term> {
        if !attr.reference {
            return Ok(t);
        }
        let c = attr.concept.as_deref().unwrap();
        if let Term::Func(name, _) = &t {
            if name == c {
                return Ok(t);
            }
        }
        if let Term::Var(v) = &t {
            if let Some(id) = self.labels.get(v) {
                if self.entities[*id].concept == c {
                    let r = self.reference_of(*id);
                    if matches!(&r, Term::Func(n, _) if n == c) {
                        return Ok(r);
                    }
                }
            }
        }
        let sig = self.sig(c)?;
        if sig.keys().len() != 1 {
            return Err(CnlError::MissingAttribute { concept: c.to_string(), attribute: sig.attributes[sig.keys()[1]].name.join(" ") });
        }
        Ok(Term::Func(c.to_string(), vec![t]))
    }

    fn set_slot(&mut self, id: usize, path: &[usize], value: Term) -> R<()> {
        let concept = self.entities[id].concept.clone();
        let attr = self.attr_at(&concept, path)?;
        let v = self.wrap(&attr, value)?;
        if is_angle(&attr) {
            self.angles.push(self.inner(&v));
        }
        if let Some(c) = &attr.concept {
            let inner = self.inner(&v);
            if inner.is_variable() {
                self.last.insert(c.clone(), (inner, 0));
            }
        }
        let e = &mut self.entities[id];
        if path.len() == 1 {
            e.slots[path[0]] = v;
            e.explicit[path[0]] = true;
        } else if let Term::Func(_, args) = &mut e.slots[path[0]] {
            args[path[1]] = v;
            e.explicit[path[0]] = true;
        }
        Ok(())
    }

    fn check_ground(&self, id: usize) -> R<()> {
        let e = &self.entities[id];
        let sig = self.sig(&e.concept)?;
        for (i, t) in e.slots.iter().enumerate() {
            if let Some(v) = t.variables().into_iter().next() {
                if self.is_lazy(&v) {
                    return Err(CnlError::MissingAttribute { concept: e.concept.clone(), attribute: sig.attributes[i].name.join(" ") });
                }
                return Err(CnlError::NonGroundFact(v.to_string()));
            }
        }
        Ok(())
    }

    /// Index of the slot of `concept`'s entity that holds values of `unit`.
    fn unit_slot(&self, concept: &str, unit: &str) -> Option<usize> {
        let sig = self.reg.get(concept)?;
        sig.attributes.iter().position(|a| a.concept.as_deref() == Some(unit) || predicate_name(&a.name) == unit)
    }

    fn shifted(&self, unit: &str, direction: Direction) -> R<Term> {
        let (base, off) = self.last.get(unit).cloned().ok_or_else(|| CnlError::Unsupported(format!("no {unit} to shift from")))?;
        let d = if direction == Direction::Next { 1 } else { -1 };
        Ok(base.offset(off + d))
    }

    fn unit_concept(&self, unit: &[String]) -> R<String> {
        self.reg
            .temporal_for_unit(unit)
            .or_else(|| self.reg.lookup(unit))
            .map(|s| s.predicate.clone())
            .ok_or_else(|| CnlError::UnknownConcept(unit.join(" ")))
    }

    /// Translates a noun phrase. With `need_atom`, or when the phrase sets
    /// attributes, an entity and its atom are created.
    fn mention(&mut self, m: &Mention, need_atom: bool) -> R<MentionOut> {
        let mut out = MentionOut::default();
        let Some(sig) = self.reg.lookup(&m.concept).cloned() else {
            let pred = predicate_name(&m.concept);
            if need_atom || !m.attributes.is_empty() {
                return Err(CnlError::UnknownConcept(pred));
            }
            out.value = Some(match &m.label {
                Some(l) => self.term(l, None)?,
                None => self.gen(true, None),
            });
            out.concept = Some(pred);
            return Ok(out);
        };
        let concept = sig.predicate.clone();
        out.concept = Some(concept.clone());
        let mut own = Vec::new();
        for w in &m.attributes {
            if w.shift.is_some() || self.resolve(&concept, &w.attribute)?.is_some() {
                own.push(w);
                continue;
            }
            let Some(other) = self.reg.lookup(&w.attribute).map(|s| s.predicate.clone()) else {
                return Err(CnlError::UnknownAttribute { concept: concept.clone(), attribute: w.attribute.join(" ") });
            };
            let op = w.value.as_ref().or(match &w.condition {
                Some(Condition::Compare { word: CompareWord::EqualTo, rhs, .. }) => Some(rhs),
                _ => None,
            });
            let term = match op {
                Some(v) => self.term(v, Some(&other))?,
                None => self.gen(true, Some(&other)),
            };
            out.extras.push(Filler { concept: Some(other), term });
        }
        let label_slot = sig.label_slot();
        let multi_key = label_slot.is_none();
        let needs_entity = need_atom || !own.is_empty() || (m.label.is_some() && multi_key) || m.shift.is_some();
        if !needs_entity {
            let value = match &m.label {
                Some(l) => self.term(l, Some(&concept))?,
                None => self.gen(true, Some(&concept)),
            };
            if let Term::Var(v) = &value {
                self.binders.entry(value.clone()).or_insert_with(|| concept.clone());
                let _ = v;
            }
            if value.is_variable() {
                self.last.insert(concept.clone(), (value.clone(), 0));
            }
            if let Some(c) = &m.condition {
                self.mention_condition(&concept, value.clone(), c, &mut out)?;
            }
            out.value = Some(value);
            return Ok(out);
        }
        let id = self.new_entity(&concept)?;
        out.entity = Some(id);
        let label_targets_slot = own.iter().any(|w| {
            w.shift.is_none() && matches!(self.resolve(&concept, &w.attribute), Ok(Some(p)) if Some(p[0]) == label_slot)
        });
        if let Some(l) = &m.label {
            let name = l.to_string();
            match label_slot {
                Some(s) if !label_targets_slot => {
                    let t = self.term(l, Some(&concept))?;
                    self.set_slot(id, &[s], t)?;
                    if l.variable().is_some() {
                        self.labels.insert(name, id);
                    }
                }
                _ => {
                    self.labels.insert(name, id);
                }
            }
        }
        if let Some(s) = &m.shift {
            let unit = self.unit_concept(&s.unit)?;
            let slot = self.unit_slot(&concept, &unit).ok_or_else(|| CnlError::UnknownAttribute { concept: concept.clone(), attribute: s.unit.join(" ") })?;
            let t = self.shifted(&unit, s.direction)?;
            self.set_slot(id, &[slot], t)?;
        }
        let mut with_cmps: Vec<(usize, Comparison)> = Vec::new();
        for w in own {
            if let Some((d, unit, anchor)) = &w.shift {
                let unit = self.unit_concept(unit)?;
                let slot = self.unit_slot(&concept, &unit).ok_or_else(|| CnlError::UnknownAttribute { concept: concept.clone(), attribute: unit.clone() })?;
                let a = self.term(anchor, None)?;
                self.set_slot(id, &[slot], a.offset(if *d == Direction::Next { 1 } else { -1 }))?;
                continue;
            }
            let path = self.resolve(&concept, &w.attribute)?.unwrap();
            let attr = self.attr_at(&concept, &path)?;
            let hint = attr.concept.clone();
            match (&w.value, &w.condition) {
                (Some(v), Some(Condition::Compare { word: CompareWord::EqualTo, rhs, .. })) => {
                    let t = self.term(rhs, hint.as_deref())?;
                    if let Some(name) = v.variable() {
                        self.wsub.insert(name.to_string(), rhs.clone());
                    }
                    self.set_slot(id, &path, t)?;
                }
                (Some(v), cond) => {
                    let t = self.term(v, hint.as_deref())?;
                    self.set_slot(id, &path, t.clone())?;
                    if let Some(c) = cond {
                        for cmp in self.condition(t, c, hint.as_deref())? {
                            with_cmps.push((path[0], cmp));
                        }
                    }
                }
                (None, Some(Condition::Compare { word: CompareWord::EqualTo, rhs, .. })) => {
                    let t = self.term(rhs, hint.as_deref())?;
                    self.set_slot(id, &path, t)?;
                }
                (None, Some(c)) => {
                    let t = self.inner(&self.slot_term(id, &path));
                    self.entities[id].explicit[path[0]] = true;
                    for cmp in self.condition(t, c, hint.as_deref())? {
                        with_cmps.push((path[0], cmp));
                    }
                }
                (None, None) => {}
            }
        }
        with_cmps.sort_by_key(|(i, _)| *i);
        out.cmps = topological(with_cmps.into_iter().map(|(_, c)| c).collect());
        let value = match label_slot {
            Some(s) => self.inner(&self.entities[id].slots[s]),
            None => self.reference_of(id),
        };
        if let (Some(s), true) = (label_slot, value.is_variable()) {
            self.binders.entry(value.clone()).or_insert_with(|| concept.clone());
            if self.reg.get(&concept).is_some_and(|g| g.temporal().is_some()) || s == 0 {
                self.last.insert(concept.clone(), (value.clone(), 0));
            }
        }
        if let Some(c) = &m.condition {
            self.mention_condition(&concept, value.clone(), c, &mut out)?;
        }
        out.value = Some(value);
        out.atom = Some(self.entity_atom(id));
        Ok(out)
    }

    /// `that is after 0`, or a positional comparison on a list concept.
    fn mention_condition(&mut self, concept: &str, value: Term, c: &Condition, out: &mut MentionOut) -> R<()> {
        let is_list = matches!(self.reg.get(concept).map(|s| &s.kind), Some(ConceptKind::List { .. }));
        if let (true, Condition::Temporal { negated, order, rhs }) = (is_list, c) {
            let value = if self.is_lazy(&value) {
                if let Term::Gen(g) = &value {
                    self.lazy.remove(g);
                }
                value
            } else {
                value
            };
            let rhs_t = self.term(rhs, Some(concept))?;
            let o1 = self.gen(false, None);
            let o2 = self.gen(false, None);
            let sig = self.sig(concept)?;
            for (o, v) in [(&o1, &value), (&o2, &rhs_t)] {
                let mut args = vec![o.clone(), v.clone()];
                for _ in 2..sig.arity() {
                    args.push(self.gen(true, None));
                }
                self.prefix.push(Literal::Pos(Atom::new(concept, args)));
            }
            let mut op = if *order == Order::Before { CompareOp::Lt } else { CompareOp::Gt };
            if *negated {
                op = op.negate();
            }
            out.cmps.push(Comparison::new(op, o1.clone(), o2.clone()));
            self.positional.push((o2, rhs_t, concept.to_string()));
            self.positional.push((o1, value, concept.to_string()));
            return Ok(());
        }
        out.cmps.extend(self.condition(value, c, Some(concept))?);
        Ok(())
    }

    fn condition(&mut self, lhs: Term, c: &Condition, hint: Option<&str>) -> R<Vec<Comparison>> {
        Ok(match c {
            Condition::Compare { word, rhs, .. } => {
                vec![Comparison::new(compare_op(*word), lhs, self.operand(rhs, hint)?).variable_left()]
            }
            Condition::Temporal { negated, order, rhs } => {
                let mut op = if *order == Order::After { CompareOp::Gt } else { CompareOp::Lt };
                if *negated {
                    op = op.negate();
                }
                vec![Comparison::new(op, lhs, self.operand(rhs, hint)?).variable_left()]
            }
            Condition::Between { low, high } => {
                let lo = self.operand(low, hint)?;
                let hi = self.operand(high, hint)?;
                vec![Comparison::new(CompareOp::Ge, lhs.clone(), lo), Comparison::new(CompareOp::Le, lhs, hi)]
            }
            Condition::OneOf { .. } => return Err(CnlError::Unsupported("`one of` outside a where clause".into())),
        })
    }

    // -- relation atoms -------------------------------------------------------

    fn relation_signature(&mut self, predicate: &str, fillers: &[Filler]) -> R<Signature> {
        if let Some(s) = self.reg.get(predicate) {
            return Ok(s.clone());
        }
        let attributes = fillers
            .iter()
            .map(|f| Attribute {
                name: vec![f.concept.clone().unwrap_or_else(|| "value".into())],
                key: true,
                concept: f.concept.clone(),
                reference: false,
            })
            .collect();
        let sig = Signature { predicate: predicate.to_string(), kind: ConceptKind::Relation, attributes };
        self.reg.insert(sig.clone())?;
        Ok(sig)
    }

    /// Slot of `sig` that receives a value of `concept`.
    fn slot_for(&self, sig: &Signature, concept: Option<&str>, used: &[bool]) -> Option<usize> {
        let free = |i: &usize| !used[*i];
        if let Some(c) = concept {
            if let Some(i) = (0..sig.arity()).filter(free).find(|i| sig.attributes[*i].concept.as_deref() == Some(c)) {
                return Some(i);
            }
            if let Some(i) = (0..sig.arity()).filter(free).find(|i| predicate_name(&sig.attributes[*i].name) == c) {
                return Some(i);
            }
            if let Some(other) = self.reg.get(c) {
                if let Some(k) = other.label_slot() {
                    let key = &other.attributes[k].name;
                    if let Some(i) = (0..sig.arity()).filter(free).find(|i| &sig.attributes[*i].name == key) {
                        return Some(i);
                    }
                }
            }
        }
        None
    }

    fn relation_atom(&mut self, predicate: &str, fillers: &[Filler]) -> R<Atom> {
        let sig = self.relation_signature(predicate, fillers)?;
        let mut slots = Vec::new();
        for a in &sig.attributes {
            slots.push(self.default_slot(a, 0)?);
        }
        let mut used = vec![false; sig.arity()];
        for f in fillers {
            let idx = self.slot_for(&sig, f.concept.as_deref(), &used).or_else(|| (0..sig.arity()).find(|i| !used[*i]));
            let Some(i) = idx else {
                return Err(CnlError::ArityConflict { predicate: predicate.to_string(), expected: sig.arity(), found: fillers.len() });
            };
            used[i] = true;
            let attr = &sig.attributes[i];
            slots[i] = self.wrap(attr, f.term.clone())?;
            if is_angle(attr) {
                self.angles.push(f.term.clone());
            }
            if let (Some(c), true) = (&f.concept, f.term.is_variable()) {
                self.last.insert(c.clone(), (f.term.clone(), 0));
            }
        }
        Ok(Atom::new(predicate, slots))
    }

    /// Fills default slots of an entity; returns the slots used.
    fn fill_entity(&mut self, id: usize, fillers: &[Filler], touched: &mut Vec<usize>) -> R<()> {
        let concept = self.entities[id].concept.clone();
        let sig = self.sig(&concept)?;
        for f in fillers {
            if let Some(i) = (0..sig.arity()).find(|i| self.inner(&self.entities[id].slots[*i]) == f.term && f.term.is_variable()) {
                touched.push(i);
                continue;
            }
            let used: Vec<bool> = self.entities[id].explicit.clone();
            let Some(i) = self.slot_for(&sig, f.concept.as_deref(), &used) else {
                return Err(CnlError::ArityConflict { predicate: concept.clone(), expected: sig.arity(), found: fillers.len() });
            };
            self.set_slot(id, &[i], f.term.clone())?;
            touched.push(i);
        }
        Ok(())
    }

    // -- clauses ----------------------------------------------------------------

    /// Translates a clause into literals appended to `out`. `flip` negates
    /// the relation; `subject` replaces an elided subject; `extra` adds
    /// fillers; `group_by` receives concept atoms binding the subject.
    fn clause(
        &mut self,
        c: &Clause,
        flip: bool,
        subject: Option<Filler>,
        extra: &[Filler],
        mut group_by: Option<&mut Vec<Literal>>,
        out: &mut Vec<Literal>,
    ) -> R<()> {
        let negated = c.negated != flip;
        let mut fillers = Vec::new();
        let mut window_prev: Option<(Shift, Filler)> = None;
        match &c.subject {
            Subject::Mention(m) => {
                let mo = self.mention(m, false)?;
                if let Some(a) = mo.atom.clone() {
                    out.push(Literal::Pos(a));
                }
                self.cmps.extend(mo.cmps.iter().cloned().map(Literal::Cmp));
                if let Some(g) = group_by.as_deref_mut() {
                    if mo.atom.is_none() {
                        let v = mo.value.clone().unwrap();
                        g.push(self.binding_atom(mo.concept.as_deref().unwrap_or("value"), v)?);
                    }
                }
                let f = mo.filler();
                self.prev_subject = Some(f.clone());
                fillers.push(f);
                fillers.extend(mo.extras);
            }
            Subject::Shift(s) => {
                let base = self.prev_subject.clone().ok_or_else(|| CnlError::Unsupported("shifted clause without a subject".into()))?;
                fillers.push(base.clone());
                let unit = self.unit_concept(&s.unit)?;
                if s.count.is_some() {
                    window_prev = Some((s.clone(), Filler { concept: Some(unit), term: Term::Anon }));
                } else {
                    let t = self.shifted(&unit, s.direction)?;
                    fillers.push(Filler { concept: Some(unit), term: t });
                }
            }
            Subject::None => {
                if let Some(s) = subject.clone() {
                    fillers.push(s);
                }
            }
        }
        let mut verb = c.verb.clone();
        let mut objects: Vec<&Object> = c.objects.iter().collect();
        // `has a position in a seat S`: the object concept is the predicate.
        let mut target: Option<usize> = None;
        let bare = normalize_verb(&verb, true).is_empty();
        if bare {
            if let Some(first) = objects.first() {
                if let Some(sig) = self.reg.lookup(&first.mention.concept) {
                    if !matches!(sig.kind, ConceptKind::Relation) {
                        let mo = self.mention(&first.mention, true)?;
                        target = mo.entity;
                        self.cmps.extend(mo.cmps.into_iter().map(Literal::Cmp));
                        objects.remove(0);
                    }
                }
            }
        }
        let mut entity_atoms = Vec::new();
        for o in objects {
            let m = &o.mention;
            let known = self.reg.lookup(&m.concept).is_some();
            let existing = self.reg.get(&normalize_verb(&verb, true)).is_some();
            if !known && !existing && m.label.is_none() && m.attributes.is_empty() && target.is_none() {
                if let Some(p) = o.preposition.as_deref().filter(|p| *p != "and") {
                    verb.push(p.to_string());
                }
                verb.extend(m.concept.iter().cloned());
                continue;
            }
            let mo = self.mention(m, false)?;
            if let Some(a) = mo.atom.clone() {
                entity_atoms.push(Literal::Pos(a));
            }
            self.cmps.extend(mo.cmps.iter().cloned().map(Literal::Cmp));
            if let (Some(g), Some(v)) = (group_by.as_deref_mut(), mo.value.clone()) {
                if v.is_variable() && !self.is_lazy(&v) && !self.bound_in_items(&v) && mo.atom.is_none() {
                    g.push(self.binding_atom(mo.concept.as_deref().unwrap_or("value"), v)?);
                }
            }
            fillers.push(mo.filler());
            fillers.extend(mo.extras);
        }
        fillers.extend(extra.iter().cloned());
        for (attr, v) in &c.pairs {
            let t = self.term(v, None)?;
            let concept = self.reg.lookup(attr).map(|s| s.predicate.clone()).unwrap_or_else(|| predicate_name(attr));
            fillers.push(Filler { concept: Some(concept), term: t });
        }
        out.extend(entity_atoms);
        let build = |cx: &mut Ctx, fillers: &[Filler]| -> R<Atom> {
            match target {
                Some(id) => {
                    let saved = cx.entities[id].clone();
                    cx.fill_entity(id, fillers, &mut Vec::new())?;
                    let a = cx.entity_atom(id);
                    cx.entities[id] = saved;
                    Ok(a)
                }
                None => {
                    let pred = normalize_verb(&verb, !c.objects.is_empty());
                    if pred.is_empty() {
                        return Err(CnlError::Unsupported(format!("verb `{}`", c.verb.join(" "))));
                    }
                    cx.relation_atom(&pred, fillers)
                }
            }
        };
        // Pair fillers name attributes of the target directly.
        if let Some(id) = target {
            let concept = self.entities[id].concept.clone();
            let mut rest = Vec::new();
            for f in fillers.drain(..) {
                rest.push(f);
            }
            let mut direct = Vec::new();
            for (attr, v) in &c.pairs {
                if let Some(path) = self.resolve(&concept, attr)? {
                    let t = self.term(v, None)?;
                    direct.push((path, t));
                }
            }
            for (path, t) in direct {
                self.set_slot(id, &path, t.clone())?;
                rest.retain(|f| f.term != t);
            }
            fillers = rest;
        }
        if let Some((n, unit)) = &c.window {
            let unit = self.unit_concept(unit)?;
            let n = self.window_length(n, &unit)?;
            let d1 = self.gen(false, Some(&unit));
            let d2 = self.gen(false, None);
            fillers.push(Filler { concept: Some(unit.clone()), term: d2.clone() });
            let atom = build(self, &fillers)?;
            out.push(self.binding_atom(&unit, d1.clone())?);
            let cond = vec![
                Literal::Pos(atom),
                Literal::Cmp(Comparison::new(CompareOp::Ge, d2.clone(), d1.clone())),
                Literal::Cmp(Comparison::new(CompareOp::Le, d2.clone(), d1.clone().offset(n - 1))),
            ];
            out.push(count_literal(d2, cond, if negated { CompareOp::Ne } else { CompareOp::Eq }, n));
            self.last.insert(unit, (d1, n - 1));
            return Ok(());
        }
        if let Some((s, unit_filler)) = window_prev {
            let unit = unit_filler.concept.unwrap();
            let n = self.window_length(s.count.as_ref().unwrap(), &unit)?;
            let (base, off) = self.last.get(&unit).cloned().ok_or_else(|| CnlError::Unsupported(format!("no {unit} to count from")))?;
            let anchor = base.clone().offset(off);
            let d2 = self.gen(false, None);
            fillers.push(Filler { concept: Some(unit.clone()), term: d2.clone() });
            let atom = build(self, &fillers)?;
            let (lo, hi) = if s.direction == Direction::Previous { (anchor.clone().offset(-n), anchor.clone().offset(-1)) } else { (anchor.clone().offset(1), anchor.clone().offset(n)) };
            out.push(self.binding_atom(&unit, anchor)?);
            let cond = vec![
                Literal::Pos(atom),
                Literal::Cmp(Comparison::new(CompareOp::Ge, d2.clone(), lo)),
                Literal::Cmp(Comparison::new(CompareOp::Le, d2.clone(), hi)),
            ];
            out.push(count_literal(d2, cond, if negated { CompareOp::Ne } else { CompareOp::Eq }, n));
            return Ok(());
        }
        let atom = build(self, &fillers)?;
        out.push(if negated { Literal::Neg(atom) } else { Literal::Pos(atom) });
        Ok(())
    }

    fn window_length(&mut self, n: &Operand, unit: &str) -> R<i64> {
        let n = match self.term(n, None)? {
            Term::Num(n) if n > 0 => n,
            other => return Err(CnlError::Unsupported(format!("window length `{other}`"))),
        };
        if let Some((lo, hi)) = self.reg.bounds(unit) {
            if n > hi - lo + 1 {
                return Err(CnlError::WindowExceedsRange { concept: unit.to_string(), length: n });
            }
        }
        Ok(n)
    }

    fn bound_in_items(&self, v: &Term) -> bool {
        self.items.iter().any(|l| {
            let mut found = false;
            if let Literal::Pos(_) = l {
                l.visit_terms(&mut |t| found |= t == v);
            }
            found
        })
    }

    /// Atom of `concept` whose label slot holds `value`.
    fn binding_atom(&mut self, concept: &str, value: Term) -> R<Literal> {
        let Some(sig) = self.reg.get(concept).cloned() else {
            return Ok(Literal::Pos(Atom::new(concept, vec![value])));
        };
        let slot = sig.label_slot().unwrap_or(0);
        let mut args = Vec::new();
        for (i, a) in sig.attributes.iter().enumerate() {
            args.push(if i == slot { value.clone() } else { self.default_slot(a, 0)? });
        }
        Ok(Literal::Pos(Atom::new(concept, args)))
    }

    fn whenevers(&mut self, ws: &[Whenever]) -> R<()> {
        for w in ws {
            for m in &w.mentions {
                let mo = self.mention(m, true)?;
                let atom = mo.atom.unwrap();
                self.items.push(if w.negated { Literal::Neg(atom) } else { Literal::Pos(atom) });
                self.cmps.extend(mo.cmps.into_iter().map(Literal::Cmp));
            }
        }
        Ok(())
    }

    fn agent(&mut self, agent: &Agent) -> R<Option<Filler>> {
        match agent {
            Agent::We => Ok(None),
            Agent::Every(m) => {
                let mo = self.mention(m, true)?;
                self.items.push(Literal::Pos(mo.atom.clone().unwrap()));
                self.cmps.extend(mo.cmps.iter().cloned().map(Literal::Cmp));
                let mut f = mo.filler();
                if let Some(id) = mo.entity {
                    if self.reg.get(&self.entities[id].concept).is_some_and(|s| s.label_slot().is_none()) {
                        f.term = self.reference_of(id);
                    }
                }
                Ok(Some(f))
            }
            Agent::Label(l) => {
                let name = l.to_string();
                let id = *self.labels.get(&name).ok_or_else(|| CnlError::UndefinedSignature(name.clone()))?;
                let concept = self.entities[id].concept.clone();
                let term = match self.reg.get(&concept).and_then(|s| s.label_slot()) {
                    Some(s) => self.inner(&self.entities[id].slots[s]),
                    None => self.reference_of(id),
                };
                Ok(Some(Filler { concept: Some(concept), term }))
            }
        }
    }

    fn bounds(&mut self, q: &Option<Quantity>) -> R<(Option<Term>, Option<Term>)> {
        Ok(match q {
            None => (None, None),
            Some(Quantity::Bound(QuantityKind::Exactly, n)) => {
                let t = self.term(n, None)?;
                (Some(t.clone()), Some(t))
            }
            Some(Quantity::Bound(QuantityKind::AtMost, n)) => (Some(Term::Num(0)), Some(self.term(n, None)?)),
            Some(Quantity::Bound(QuantityKind::AtLeast, n)) => (Some(self.term(n, None)?), None),
            Some(Quantity::Between(a, b)) => (Some(self.term(a, None)?), Some(self.term(b, None)?)),
        })
    }

    fn choice(&mut self, head: &ChoiceHead, agent: Option<Filler>) -> R<Vec<Statement>> {
        let agent_fillers: Vec<Filler> = agent.into_iter().collect();
        // Disjunctive heads.
        if !head.alternatives.is_empty() {
            let mut atoms = Vec::new();
            let firsts: Vec<&Mention> = head.target.iter().chain(head.objects.iter()).collect();
            for m in firsts.into_iter().chain(head.alternatives.iter()) {
                let mo = self.mention(m, true)?;
                let id = mo.entity.unwrap();
                self.fill_entity(id, &agent_fillers, &mut Vec::new())?;
                self.cmps.extend(mo.cmps.into_iter().map(Literal::Cmp));
                atoms.push(self.entity_atom(id));
            }
            let body = self.body();
            return Ok(vec![self.finish(Statement::Rule(Rule { head: Head::Disjunction(atoms), body }))?]);
        }
        let mut condition = Vec::new();
        let mut for_each = Vec::new();
        for m in &head.for_each {
            let mo = self.mention(m, true)?;
            self.items.push(Literal::Pos(mo.atom.clone().unwrap()));
            for_each.push(mo.filler());
        }
        let (lower, upper);
        let mut reduced: Option<(usize, Vec<usize>)> = None;
        let element_atom = if let Some(target) = &head.target {
            let mut tm = target.clone();
            if let Some(link) = &head.link {
                let mut words = tm.concept.clone();
                words.push(link.clone());
                if self.reg.lookup(&words).is_some() && self.reg.lookup(&tm.concept).is_none() {
                    tm.concept = words;
                }
            }
            let mo = self.mention(&tm, true)?;
            let id = mo.entity.unwrap();
            condition.extend(mo.cmps.into_iter().map(Literal::Cmp));
            let mut touched = Vec::new();
            self.fill_entity(id, &agent_fillers, &mut touched)?;
            self.fill_entity(id, &for_each, &mut touched)?;
            let agent_slots = touched.clone();
            let mut object_slots = Vec::new();
            for o in &head.objects {
                let om = self.mention(o, true)?;
                condition.push(Literal::Pos(om.atom.clone().unwrap()));
                condition.extend(om.cmps.iter().cloned().map(Literal::Cmp));
                let f = om.filler();
                let mut t = Vec::new();
                let explicit = self.entities[id].explicit.clone();
                let hit = (0..explicit.len()).find(|i| self.inner(&self.entities[id].slots[*i]) == f.term);
                match hit {
                    Some(i) => t.push(i),
                    None => self.fill_entity(id, &[f], &mut t)?,
                }
                object_slots.extend(t);
            }
            let q = if head.link_quantity.is_some() { &head.link_quantity } else { &head.quantity };
            (lower, upper) = self.bounds(q)?;
            if head.duration.is_some() {
                let mut keep = agent_slots;
                keep.extend(object_slots);
                keep.sort();
                keep.dedup();
                reduced = Some((id, keep));
            }
            self.entity_atom(id)
        } else {
            let mut fillers = agent_fillers.clone();
            fillers.extend(for_each.iter().cloned());
            for o in &head.objects {
                if let Some(rel) = &o.relation {
                    let mut plain = o.clone();
                    plain.relation = None;
                    let mo = self.mention(&plain, false)?;
                    if let Some(a) = mo.atom.clone() {
                        condition.push(Literal::Pos(a));
                    }
                    let ro = self.mention(&rel.1, false)?;
                    let pred = normalize_verb(&rel.0, true);
                    let ratom = self.relation_atom(&pred, &[ro.filler(), mo.filler()])?;
                    condition.push(Literal::Pos(ratom));
                    fillers.push(mo.filler());
                } else {
                    let mo = self.mention(o, self.reg.lookup(&o.concept).is_some())?;
                    if let Some(a) = mo.atom.clone() {
                        condition.push(Literal::Pos(a));
                    }
                    condition.extend(mo.cmps.iter().cloned().map(Literal::Cmp));
                    fillers.push(mo.filler());
                }
            }
            (lower, upper) = self.bounds(&head.quantity)?;
            let pred = normalize_verb(&head.verb, !head.objects.is_empty());
            if pred.is_empty() {
                return Err(CnlError::Unsupported(format!("verb `{}`", head.verb.join(" "))));
            }
            self.relation_atom(&pred, &fillers)?
        };
        for m in &head.such_that {
            let mo = self.mention(m, true)?;
            condition.push(Literal::Pos(mo.atom.unwrap()));
            condition.extend(mo.cmps.into_iter().map(Literal::Cmp));
        }
        let body = self.body();
        let Some((id, keep)) = reduced else {
            let h = Head::Choice { lower, upper, elements: vec![ChoiceElement { atom: element_atom, condition }] };
            return Ok(vec![self.finish(Statement::Rule(Rule { head: h, body }))?]);
        };
        // Duration: choose a start, then project it over consecutive values.
        let (n, unit) = head.duration.as_ref().unwrap();
        let unit = self.unit_concept(unit)?;
        let concept = self.entities[id].concept.clone();
        let slot = self.unit_slot(&concept, &unit).ok_or_else(|| CnlError::UnknownAttribute { concept: concept.clone(), attribute: unit.clone() })?;
        let full = element_atom;
        let small = Atom::new(&concept, keep.iter().map(|i| full.args[*i].clone()).collect());
        let length = self.term(n, None)?;
        let start = self.inner(&full.args[slot]);
        let end = Term::arith(ArithOp::Sub, Term::arith(ArithOp::Add, start.clone(), length), Term::Num(1));
        let mut spread = full.args.clone();
        spread[slot] = self.wrap(&self.sig(&concept)?.attributes[slot].clone(), Term::Range(Box::new(start), Box::new(end)))?;
        let support = "_generated_support";
        let choice = Head::Choice { lower, upper, elements: vec![ChoiceElement { atom: small.clone(), condition }] };
        let atoms_only: Vec<Literal> = body.iter().filter(|l| !matches!(l, Literal::Cmp(_))).cloned().collect();
        let mut support_body = vec![Literal::Pos(small.clone())];
        support_body.extend(atoms_only);
        let projection = Rule {
            head: Head::Disjunction(vec![full.clone()]),
            body: vec![Literal::Pos(Atom::new(support, full.args.clone())), Literal::Pos(small)],
        };
        let generated = Rule { head: Head::Disjunction(vec![Atom::new(support, spread)]), body: support_body };
        Ok(vec![
            self.finish(Statement::Rule(Rule { head: choice, body }))?,
            self.finish(Statement::Rule(projection))?,
            self.finish(Statement::Rule(generated))?,
        ])
    }

    // -- constraints --------------------------------------------------------

    fn statement(&mut self, s: &Statement_, required: bool) -> R<()> {
        match s {
            Statement_::Clauses(cs) => {
                for c in cs {
                    let mut lits = Vec::new();
                    self.clause(c, required, None, &[], None, &mut lits)?;
                    self.items.extend(lits);
                }
            }
            Statement_::WhenThen { when, then } => {
                for c in when {
                    let mut lits = Vec::new();
                    self.clause(c, false, None, &[], None, &mut lits)?;
                    self.items.extend(lits);
                }
                for c in then {
                    let mut lits = Vec::new();
                    self.clause(c, required, None, &[], None, &mut lits)?;
                    self.items.extend(lits);
                }
            }
            Statement_::Aggregate { aggregate, condition } => {
                let (op, rhs) = match condition {
                    Condition::Compare { word, rhs, .. } => (compare_op(*word), rhs),
                    _ => return Err(CnlError::Unsupported("aggregate condition".into())),
                };
                let op = if required { op.negate() } else { op };
                let guard = self.term(rhs, None)?;
                let (pre, lit) = self.aggregate(aggregate, op, guard)?;
                self.main.extend(pre);
                self.main.push(lit);
            }
            Statement_::Comparison { lhs, condition } => {
                let hint = self.operand_hint(lhs, condition);
                let l = match (lhs, &hint) {
                    (Operand::Entity { concept, label }, Some(h)) => {
                        let id = self.entity_of(label, concept)?;
                        let c = self.entities[id].concept.clone();
                        let slot = self.unit_slot(&c, h).ok_or_else(|| CnlError::UnknownAttribute { concept: c.clone(), attribute: h.clone() })?;
                        self.inner(&self.entities[id].slots[slot])
                    }
                    _ => self.operand(lhs, hint.as_deref())?,
                };
                for c in self.condition(l, condition, hint.as_deref())? {
                    let c = if required { c.negated() } else { c };
                    self.main.push(Literal::Cmp(c.variable_left()));
                }
            }
        }
        self.positional_bounds()?;
        Ok(())
    }

    /// Temporal concept implied by a time or date on the right-hand side.
    fn operand_hint(&self, lhs: &Operand, c: &Condition) -> Option<String> {
        let rhs = match c {
            Condition::Compare { rhs, .. } | Condition::Temporal { rhs, .. } => rhs,
            Condition::Between { low, .. } => low,
            Condition::OneOf { .. } => return None,
        };
        let sig = match rhs {
            Operand::Time { .. } => self.minutes_concept(None),
            Operand::Date { .. } => self.days_concept(None),
            _ => None,
        }?;
        if let Operand::Entity { label, .. } = lhs {
            let id = *self.labels.get(&label.to_string())?;
            let c = &self.entities[id].concept;
            for s in self.reg.concepts() {
                if s.temporal().is_some() && self.unit_slot(c, &s.predicate).is_some() && sig.predicate == s.predicate {
                    return Some(s.predicate.clone());
                }
            }
        }
        Some(sig.predicate)
    }

    fn positional_bounds(&mut self) -> R<()> {
        let ops = std::mem::take(&mut self.positional);
        for (o, value, concept) in ops {
            let n = self.reg.bounds(&concept).map(|b| b.1).unwrap_or(1);
            let (lo, hi) = match value.clone() {
                Term::Var(v) if self.between.contains_key(&v) => {
                    let (l, h) = self.between[&v].clone();
                    let idx = |cx: &Ctx, op: &Operand| -> R<i64> {
                        cx.reg.list_index(&concept, &op.to_string()).ok_or_else(|| CnlError::LabelOutOfRange { concept: concept.clone(), label: op.to_string() })
                    };
                    (idx(self, &l)?, idx(self, &h)?)
                }
                _ => (1, n),
            };
            self.cmps.push(Literal::Cmp(Comparison::new(CompareOp::Ge, o.clone(), Term::Num(lo))));
            self.cmps.push(Literal::Cmp(Comparison::new(CompareOp::Le, o, Term::Num(hi))));
        }
        Ok(())
    }

    /// Records `S is between morning and night` on list values.
    fn where_between(&mut self, rest: &[WhereCondition]) -> R<()> {
        for w in rest {
            if let (Some(v), Condition::Between { low, high }) = (w.subject.variable(), &w.condition) {
                if self.reg.list_of_value(&low.to_string()).is_some() {
                    self.between.insert(v.to_string(), (low.clone(), high.clone()));
                }
            }
        }
        Ok(())
    }

    fn where_comparisons(&mut self, rest: &[WhereCondition]) -> R<()> {
        for w in rest {
            if let Some(v) = w.subject.variable() {
                if self.between.contains_key(v) {
                    continue;
                }
            }
            let lhs = self.term(&w.subject, None)?;
            for c in self.condition(lhs, &w.condition, None)? {
                self.tail.push(Literal::Cmp(c));
            }
        }
        Ok(())
    }

    // -- aggregates -----------------------------------------------------------

    fn aggregate(&mut self, a: &Aggregate, op: CompareOp, guard: Term) -> R<(Vec<Literal>, Literal)> {
        let function = match a.function {
            AggregateFunction::Number => AspFunction::Count,
            AggregateFunction::Total => AspFunction::Sum,
            AggregateFunction::Lowest => AspFunction::Min,
            AggregateFunction::Highest => AspFunction::Max,
        };
        let mut pre = Vec::new();
        let mut cond = Vec::new();
        let terms;
        let mut for_each = Vec::new();
        for m in &a.for_each {
            let mo = self.mention(m, false)?;
            let v = mo.value.clone().unwrap();
            if let Term::Gen(g) = &v {
                self.lazy.remove(g);
            }
            if let Some(at) = mo.atom.clone() {
                pre.push(Literal::Pos(at));
            } else {
                pre.push(self.binding_atom(mo.concept.as_deref().unwrap_or("value"), v)?);
            }
            for_each.push(mo.filler());
        }
        if let Some((n, unit_m)) = &a.window {
            let mo = self.mention(&Mention { label: None, ..unit_m.clone() }, false)?;
            let unit = mo.concept.clone().unwrap();
            let n = self.window_length(n, &unit)?;
            let (_, hi) = self.reg.bounds(&unit).ok_or_else(|| CnlError::Unsupported(format!("window over `{unit}`")))?;
            let d1 = self.gen(false, Some(&unit));
            let d2 = self.gen(false, None);
            let mut extra = vec![Filler { concept: Some(unit.clone()), term: d2.clone() }];
            extra.extend(mo.extras);
            extra.extend(for_each);
            let rel = match &a.relation {
                Some(AggregateRelation::Where(c)) => c,
                _ => return Err(CnlError::Unsupported("window without a where clause".into())),
            };
            let mut group = Vec::new();
            self.clause(rel, false, None, &extra, Some(&mut group), &mut cond)?;
            pre.extend(group);
            pre.push(self.binding_atom(&unit, d1.clone())?);
            pre.push(Literal::Cmp(Comparison::new(CompareOp::Le, d1.clone(), Term::Num(hi - n + 1))));
            cond.push(Literal::Cmp(Comparison::new(CompareOp::Ge, d2.clone(), d1.clone())));
            cond.push(Literal::Cmp(Comparison::new(CompareOp::Le, d2.clone(), d1.offset(n - 1))));
            let lit = Literal::Agg(AspAggregate { function, elements: vec![AggregateElement { terms: vec![d2], condition: cond }], op, guard });
            return Ok((pre, lit));
        }
        match (&a.attribute, &a.counted, &a.per) {
            (Some(attr), None, per) => {
                // `the total of hours in a day where a nurse works in`
                let per_f = match per {
                    Some(p) => {
                        let mo = self.mention(p, false)?;
                        let mut f = mo.filler();
                        if let Term::Gen(g) = &f.term {
                            self.lazy.remove(g);
                        } else {
                            f.term = self.gen(false, None);
                        }
                        Some(f)
                    }
                    None => None,
                };
                let rel = match &a.relation {
                    Some(AggregateRelation::Where(c)) => c,
                    _ => return Err(CnlError::Unsupported("total without a where clause".into())),
                };
                let pred = normalize_verb(&rel.verb, true);
                let owner = self.reg.get(&pred).and_then(|s| {
                    s.attributes.iter().filter_map(|x| x.concept.clone()).find(|c| self.reg.get(c).is_some_and(|cs| cs.attribute(attr).is_some() && cs.label_slot() != cs.attribute(attr)))
                });
                let owner = owner.ok_or_else(|| CnlError::UnknownAttribute { concept: pred.clone(), attribute: attr.join(" ") })?;
                let osig = self.sig(&owner)?;
                let ai = osig.attribute(attr).unwrap();
                if let ConceptKind::List { .. } = &osig.kind {
                    let numeric = self.reg.facts(&owner).is_empty();
                    let _ = numeric;
                }
                let v = self.gen(false, None);
                let h = self.gen(false, None);
                let mut extra = vec![Filler { concept: Some(owner.clone()), term: v.clone() }];
                if let Some(p) = &per_f {
                    extra.push(p.clone());
                }
                extra.extend(for_each);
                let mut group = Vec::new();
                self.clause(rel, false, None, &extra, Some(&mut group), &mut cond)?;
                pre.extend(group);
                let mut join = Vec::new();
                let ls = osig.label_slot().unwrap_or(0);
                for (i, at) in osig.attributes.iter().enumerate() {
                    join.push(if i == ls {
                        v.clone()
                    } else if i == ai {
                        h.clone()
                    } else {
                        self.default_slot(at, 0)?
                    });
                }
                cond.push(Literal::Pos(Atom::new(&owner, join)));
                let mut t = vec![h];
                if let Some(p) = per_f {
                    t.push(p.term);
                }
                terms = t;
            }
            (attr, Some(counted), _) => {
                let own_attr = attr.is_some();
                let mo = self.mention(counted, own_attr)?;
                let concept = mo.concept.clone().unwrap();
                let element = match attr {
                    Some(attr) => {
                        let id = mo.entity.unwrap();
                        let path = self.resolve(&concept, attr)?.ok_or_else(|| CnlError::UnknownAttribute { concept: concept.clone(), attribute: attr.join(" ") })?;
                        if function == AspFunction::Sum {
                            self.check_numeric(&concept, &path)?;
                        }
                        let t = self.inner(&self.slot_term(id, &path));
                        if let Term::Gen(g) = &t {
                            self.lazy.remove(g);
                        }
                        t
                    }
                    None => {
                        let mut v = mo.value.clone().unwrap();
                        if let Term::Gen(g) = &v {
                            self.lazy.remove(g);
                        } else if !v.is_variable() {
                            v = self.gen(false, None);
                        }
                        v
                    }
                };
                self.cmps.extend(mo.cmps.iter().cloned().map(Literal::Cmp));
                let counted_f = Filler { concept: Some(concept.clone()), term: element.clone() };
                match &a.relation {
                    None => {
                        if let Some(at) = mo.atom.clone() {
                            cond.push(Literal::Pos(at));
                        } else {
                            cond.push(self.binding_atom(&concept, element.clone())?);
                        }
                    }
                    Some(rel) => {
                        if let (Some(at), true) = (mo.atom.clone(), own_attr) {
                            cond.push(Literal::Pos(at));
                        }
                        let mut group = Vec::new();
                        match rel {
                            AggregateRelation::That { clause, .. } => {
                                let mut extra = mo.extras.clone();
                                extra.extend(for_each);
                                self.clause(clause, false, Some(counted_f), &extra, Some(&mut group), &mut cond)?;
                            }
                            AggregateRelation::Where(clause) => {
                                let mut extra = vec![counted_f];
                                extra.extend(mo.extras.clone());
                                extra.extend(for_each);
                                self.clause(clause, false, None, &extra, Some(&mut group), &mut cond)?;
                            }
                        }
                        pre.extend(group);
                    }
                }
                terms = vec![element];
            }
            (None, None, _) => return Err(CnlError::Unsupported("aggregate without a counted concept".into())),
        }
        for m in &a.such_that {
            let mo = self.mention(m, true)?;
            cond.push(Literal::Pos(mo.atom.unwrap()));
            cond.extend(mo.cmps.into_iter().map(Literal::Cmp));
        }
        let lit = Literal::Agg(AspAggregate { function, elements: vec![AggregateElement { terms, condition: cond }], op, guard });
        Ok((pre, lit))
    }

    fn check_numeric(&self, concept: &str, path: &[usize]) -> R<()> {
        let sig = self.sig(concept)?;
        let attr = self.attr_at(concept, path)?;
        if attr.reference {
            return Err(CnlError::NonNumericSum(attr.name.join(" ")));
        }
        if let ConceptKind::List { .. } = sig.kind {
            if path[0] == 1 {
                return Err(CnlError::NonNumericSum(attr.name.join(" ")));
            }
        }
        Ok(())
    }

    // -- finalization -----------------------------------------------------------

    fn resolve_unify(&self, t: &mut Term) {
        for _ in 0..16 {
            let mut changed = false;
            t.visit_mut(&mut |x| {
                if let Term::Gen(g) = x {
                    if let Some(v) = self.unify.get(g) {
                        *x = v.clone();
                        changed = true;
                    }
                }
            });
            if !changed {
                break;
            }
        }
    }

    /// Applies unifications, wraps angle comparisons, adds binding atoms
    /// for unsafe variables, collapses singleton variables and checks safety.
    fn finish(&mut self, mut s: Statement) -> R<Statement> {
        s.visit_terms_mut(&mut |t| self.resolve_unify(t));
        let mut angles: Vec<Term> = Vec::new();
        for a in self.angles.clone() {
            let mut a = a;
            self.resolve_unify(&mut a);
            angles.extend(a.variables());
        }
        for e in self.entities.clone() {
            let sig = self.sig(&e.concept)?;
            for (i, at) in sig.attributes.iter().enumerate() {
                if is_angle(at) {
                    let mut t = self.inner(&e.slots[i]);
                    self.resolve_unify(&mut t);
                    angles.extend(t.variables());
                }
            }
        }
        wrap_angles(&mut s, &angles);
        for _ in 0..4 {
            let bad = unsafe_variables(&s);
            let mut added = false;
            for v in bad {
                let concept = self.binders.get(&v).cloned().or_else(|| {
                    self.unify.iter().find(|(_, t)| **t == v).and_then(|(g, _)| self.binders.get(&Term::Gen(*g)).cloned())
                });
                if let Some(c) = concept {
                    let lit = self.binding_atom(&c, v.clone())?;
                    match &mut s {
                        Statement::Rule(r) => r.body.push(lit),
                        Statement::Weak(w) => w.body.push(lit),
                    }
                    added = true;
                }
            }
            if !added {
                break;
            }
        }
        self.collapse(&mut s);
        if let Statement::Weak(w) = &mut s {
            w.terms = discriminants(&w.body, &w.weight);
        }
        let bad = unsafe_variables(&s);
        if !bad.is_empty() {
            let mut shown = s.clone();
            shown.renumber(0);
            return Err(CnlError::UnsafeRule { rule: shown.to_string(), variables: bad.iter().map(|v| v.to_string()).collect() });
        }
        Ok(s)
    }

    /// Replaces lazily generated variables occurring once by `_`.
    fn collapse(&self, s: &mut Statement) {
        let mut count: BTreeMap<u32, usize> = BTreeMap::new();
        s.visit_terms(&mut |t| {
            if let Term::Gen(g) = t {
                *count.entry(*g).or_default() += 1;
            }
        });
        let mut in_cmp: BTreeSet<u32> = BTreeSet::new();
        let mut note = |l: &Literal| {
            if let Literal::Cmp(_) = l {
                l.visit_terms(&mut |t| {
                    if let Term::Gen(g) = t {
                        in_cmp.insert(*g);
                    }
                });
            }
        };
        match s {
            Statement::Rule(r) => r.body.iter().for_each(&mut note),
            Statement::Weak(w) => w.body.iter().for_each(&mut note),
        }
        s.visit_terms_mut(&mut |t| {
            if let Term::Gen(g) = t {
                if self.lazy.contains(g) && count[g] == 1 && !in_cmp.contains(g) {
                    *t = Term::Anon;
                }
            }
        });
    }
}

fn count_literal(var: Term, cond: Vec<Literal>, op: CompareOp, n: i64) -> Literal {
    Literal::Agg(AspAggregate {
        function: AspFunction::Count,
        elements: vec![AggregateElement { terms: vec![var], condition: cond }],
        op,
        guard: Term::Num(n),
    })
}

fn wrap_term(t: &mut Term, angles: &[Term]) {
    if matches!(t, Term::Mod(..)) {
        return;
    }
    if t.variables().iter().any(|v| angles.contains(v)) {
        let inner = std::mem::replace(t, Term::Anon);
        *t = Term::Mod(Box::new(inner), 360);
    }
}

fn wrap_literals(ls: &mut [Literal], angles: &[Term]) {
    for l in ls {
        match l {
            Literal::Cmp(c) => {
                wrap_term(&mut c.lhs, angles);
                wrap_term(&mut c.rhs, angles);
            }
            Literal::Agg(a) => a.elements.iter_mut().for_each(|e| wrap_literals(&mut e.condition, angles)),
            _ => {}
        }
    }
}

fn wrap_angles(s: &mut Statement, angles: &[Term]) {
    if angles.is_empty() {
        return;
    }
    match s {
        Statement::Rule(r) => {
            wrap_literals(&mut r.body, angles);
            if let Head::Choice { elements, .. } = &mut r.head {
                elements.iter_mut().for_each(|e| wrap_literals(&mut e.condition, angles));
            }
        }
        Statement::Weak(w) => wrap_literals(&mut w.body, angles),
    }
}

/// Global variables of a weak constraint body, in order of first
/// occurrence, without the weight and variables bound by assignment.
fn discriminants(body: &[Literal], weight: &Term) -> Vec<Term> {
    let mut in_atoms = Vec::new();
    for l in body {
        if let Literal::Pos(a) = l {
            a.args.iter().for_each(|t| t.binding_variables(&mut in_atoms));
        }
    }
    let mut assigned: Vec<Term> = weight.variables();
    for l in body {
        match l {
            Literal::Agg(a) if a.op == CompareOp::Eq && a.guard.is_variable() => assigned.push(a.guard.clone()),
            Literal::Cmp(c) if c.op == CompareOp::Eq && c.lhs.is_variable() && !in_atoms.contains(&c.lhs) => assigned.push(c.lhs.clone()),
            _ => {}
        }
    }
    let mut out = Vec::new();
    for l in body {
        let mut vs = Vec::new();
        match l {
            Literal::Agg(a) => vs.extend(a.guard.variables()),
            other => other.visit_terms(&mut |t| {
                if t.is_variable() {
                    vs.push(t.clone());
                }
            }),
        }
        for v in vs {
            if !assigned.contains(&v) && !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}
