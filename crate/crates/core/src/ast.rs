//! Syntax tree of CNL documents and its rendering back to CNL text.

use std::fmt::{self, Display, Formatter, Write};

use crate::error::Span;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub propositions: Vec<Proposition>,
}

#[derive(Debug, Clone)]
pub struct Proposition {
    pub kind: PropositionKind,
    pub span: Span,
}

impl PartialEq for Proposition {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Proposition {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropositionKind {
    Domain(DomainDefinition),
    Temporal(TemporalDefinition),
    Constant(ConstantDefinition),
    Compound(CompoundDefinition),
    Enumerative(EnumerativeDefinition),
    WheneverThen(WheneverThen),
    Fact(Mention),
    QuantifiedChoice(ChoiceHead),
    Prohibited(ConstraintBody),
    Required(ConstraintBody),
    Weak(WeakConstraint),
}

impl PropositionKind {
    pub fn kind_name(&self) -> &'static str {
        match self {
            PropositionKind::Domain(_) => "domain definition",
            PropositionKind::Temporal(_) => "temporal definition",
            PropositionKind::Constant(_) => "constant definition",
            PropositionKind::Compound(_) => "compound definition",
            PropositionKind::Enumerative(_) => "enumerative definition",
            PropositionKind::WheneverThen(_) => "whenever/then",
            PropositionKind::Fact(_) => "fact",
            PropositionKind::QuantifiedChoice(_) => "quantified choice",
            PropositionKind::Prohibited(_) => "negative strong constraint",
            PropositionKind::Required(_) => "positive strong constraint",
            PropositionKind::Weak(_) => "weak constraint",
        }
    }
}

/// Words of a (possibly multi-word) name, as written.
pub type Words = Vec<String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermKind {
    Variable,
    StringValue,
    NumberValue,
    ConstantRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub kind: TermKind,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Term(Term),
    /// Clock time; `text` is the literal as written.
    Time { minutes: u32, text: String },
    Date { text: String },
    Binary { op: ArithOp, lhs: Box<Operand>, rhs: Box<Operand> },
    Paren(Box<Operand>),
    Abs(Box<Operand>),
    /// `the sum between a, b, and c`
    Sum(Vec<Operand>),
    /// `the difference between a and b`
    Difference(Box<Operand>, Box<Operand>),
    /// `the desired angle A of the rotation R`
    Property { attribute: Words, label: Option<Box<Operand>>, concept: Words, entity: Box<Operand> },
    /// `the assignment A`
    Entity { concept: Words, label: Box<Operand> },
}

impl Operand {
    pub fn variable(&self) -> Option<&str> {
        match self {
            Operand::Term(Term { kind: TermKind::Variable, text }) => Some(text),
            _ => None,
        }
    }
}

/// Surface form of a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareWord {
    EqualTo,
    DifferentFrom,
    LessThan,
    GreaterThan,
    MoreThan,
    AtMost,
    AtLeast,
    LessOrEqual,
    GreaterOrEqual,
}

impl CompareWord {
    pub fn text(self) -> &'static str {
        match self {
            CompareWord::EqualTo => "equal to",
            CompareWord::DifferentFrom => "different from",
            CompareWord::LessThan => "less than",
            CompareWord::GreaterThan => "greater than",
            CompareWord::MoreThan => "more than",
            CompareWord::AtMost => "at most",
            CompareWord::AtLeast => "at least",
            CompareWord::LessOrEqual => "less than or equal to",
            CompareWord::GreaterOrEqual => "greater than or equal to",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    After,
    Before,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condition {
    Compare { word: CompareWord, rhs: Operand, unit: Option<Words> },
    Temporal { negated: bool, order: Order, rhs: Operand },
    Between { low: Operand, high: Operand },
    OneOf { values: Vec<Operand>, respectively: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Next,
    Previous,
}

/// `the next step`, `the previous 2 consecutive days`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shift {
    pub direction: Direction,
    pub count: Option<Operand>,
    pub unit: Words,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WithClause {
    pub attribute: Words,
    pub value: Option<Operand>,
    pub condition: Option<Condition>,
    /// `with the next step respect to T`
    pub shift: Option<(Direction, Words, Operand)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Determiner {
    None,
    Indefinite,
    Definite,
    Every,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub determiner: Determiner,
    /// Article as written (`a`, `an`, `the`, `every`), kept for rendering.
    pub article: Option<String>,
    pub concept: Words,
    pub label: Option<Operand>,
    pub shift: Option<Shift>,
    pub attributes: Vec<WithClause>,
    pub condition: Option<Condition>,
    /// `a node connected to node X`
    pub relation: Option<Box<(Words, Mention)>>,
}

impl Mention {
    pub fn bare(concept: Words) -> Self {
        Mention {
            determiner: Determiner::None,
            article: None,
            concept,
            label: None,
            shift: None,
            attributes: Vec::new(),
            condition: None,
            relation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Object {
    pub preposition: Option<String>,
    pub mention: Mention,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subject {
    Mention(Mention),
    /// Elided subject introduced by a temporal shift.
    Shift(Shift),
    /// Elided subject (relative clauses inside aggregates).
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub subject: Subject,
    pub negated: bool,
    pub verb: Words,
    pub objects: Vec<Object>,
    /// `id S, day D, timeslot TS`
    pub pairs: Vec<(Words, Operand)>,
    /// `for 2 consecutive days`
    pub window: Option<(Operand, Words)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WhereCondition {
    pub subject: Operand,
    pub condition: Condition,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Whenever {
    pub negated: bool,
    pub mentions: Vec<Mention>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainDefinition {
    pub article: Option<String>,
    pub name: Words,
    pub keys: Vec<Words>,
    pub params: Vec<Words>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemporalUnit {
    Minutes,
    Days,
    Steps,
}

impl TemporalUnit {
    pub fn text(self) -> &'static str {
        match self {
            TemporalUnit::Minutes => "minutes",
            TemporalUnit::Days => "days",
            TemporalUnit::Steps => "steps",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalDefinition {
    pub article: Option<String>,
    pub name: Words,
    pub unit: TemporalUnit,
    pub start: Operand,
    pub end: Operand,
    pub step: Option<(i64, Words)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstantDefinition {
    pub name: String,
    pub value: Option<Operand>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompoundDefinition {
    Range { article: Option<String>, name: Words, from: Operand, to: Operand, made_of: Vec<Words> },
    List { article: Option<String>, name: Words, values: Vec<Operand>, attributes: Vec<(Words, Vec<Operand>)> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnumerativeDefinition {
    /// `John is a waiter`
    Membership { value: Operand, article: String, concept: Words },
    /// `Waiter John works in pub 1`, optionally conditional.
    Relation { clause: Clause, when: Vec<Clause>, wheres: Vec<WhereCondition> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantityKind {
    Exactly,
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Quantity {
    Bound(QuantityKind, Operand),
    Between(Operand, Operand),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Agent {
    We,
    Label(Operand),
    Every(Mention),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceHead {
    pub agent: Agent,
    pub verb: Words,
    pub quantity: Option<Quantity>,
    /// Concept mention introduced by `have`.
    pub target: Option<Mention>,
    /// Preposition between the target and the chosen objects.
    pub link: Option<String>,
    pub link_quantity: Option<Quantity>,
    pub objects: Vec<Mention>,
    pub alternatives: Vec<Mention>,
    pub such_that: Vec<Mention>,
    pub for_each: Vec<Mention>,
    pub duration: Option<(Operand, Words)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Then {
    Must { agent: Agent, target: Mention },
    Can(ChoiceHead),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WheneverThen {
    pub whenevers: Vec<Whenever>,
    pub then: Then,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateFunction {
    Number,
    Total,
    Lowest,
    Highest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AggregateRelation {
    /// `that [are] <verb> ...`: the counted element is the subject.
    That { passive: bool, clause: Clause },
    /// `where <subject> <verb>`: the counted element is an object.
    Where(Clause),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregate {
    pub function: AggregateFunction,
    /// Aggregated attribute (`value`, `hours`); `None` counts elements.
    pub attribute: Option<Words>,
    pub counted: Option<Mention>,
    /// `in a day`
    pub per: Option<Mention>,
    /// `between each 14 days`
    pub window: Option<(Operand, Mention)>,
    pub relation: Option<AggregateRelation>,
    pub for_each: Vec<Mention>,
    pub such_that: Vec<Mention>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Clauses(Vec<Clause>),
    WhenThen { when: Vec<Clause>, then: Vec<Clause> },
    Aggregate { aggregate: Aggregate, condition: Condition },
    Comparison { lhs: Operand, condition: Condition },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintBody {
    pub statement: Statement,
    pub wheres: Vec<WhereCondition>,
    pub whenevers: Vec<Whenever>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimization {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Priority {
    Low,
    Medium,
    High,
}

impl Priority {
    pub fn level(self) -> i64 {
        match self {
            Priority::Low => 1,
            Priority::Medium => 2,
            Priority::High => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeakBody {
    Aggregate(Aggregate),
    AbsDifference { lhs: Operand, aggregate: Aggregate, range: Option<(Operand, Operand)> },
    Statement { statement: Statement, whenevers: Vec<Whenever> },
    Objective { whenevers: Vec<Whenever>, target: Operand },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeakConstraint {
    pub preference: Option<Optimization>,
    pub priority: Priority,
    pub body: WeakBody,
    pub objective: Option<Optimization>,
    pub wheres: Vec<WhereCondition>,
}

// ---------------------------------------------------------------------------
// Traversal

fn clause_mentions(c: &mut Clause, f: &mut dyn FnMut(&mut Mention)) {
    if let Subject::Mention(m) = &mut c.subject {
        mention_tree(m, f);
    }
    c.objects.iter_mut().for_each(|o| mention_tree(&mut o.mention, f));
}

fn mention_tree(m: &mut Mention, f: &mut dyn FnMut(&mut Mention)) {
    f(m);
    if let Some(r) = &mut m.relation {
        mention_tree(&mut r.1, f);
    }
}

fn aggregate_mentions(a: &mut Aggregate, f: &mut dyn FnMut(&mut Mention)) {
    a.counted.iter_mut().chain(a.per.iter_mut()).for_each(|m| mention_tree(m, f));
    if let Some((_, m)) = &mut a.window {
        mention_tree(m, f);
    }
    match &mut a.relation {
        Some(AggregateRelation::That { clause, .. }) | Some(AggregateRelation::Where(clause)) => clause_mentions(clause, f),
        None => {}
    }
    a.for_each.iter_mut().chain(a.such_that.iter_mut()).for_each(|m| mention_tree(m, f));
}

fn statement_mentions(s: &mut Statement, f: &mut dyn FnMut(&mut Mention)) {
    match s {
        Statement::Clauses(cs) => cs.iter_mut().for_each(|c| clause_mentions(c, f)),
        Statement::WhenThen { when, then } => when.iter_mut().chain(then.iter_mut()).for_each(|c| clause_mentions(c, f)),
        Statement::Aggregate { aggregate, .. } => aggregate_mentions(aggregate, f),
        Statement::Comparison { .. } => {}
    }
}

fn whenever_mentions(ws: &mut [Whenever], f: &mut dyn FnMut(&mut Mention)) {
    ws.iter_mut().flat_map(|w| w.mentions.iter_mut()).for_each(|m| mention_tree(m, f));
}

fn choice_mentions(h: &mut ChoiceHead, f: &mut dyn FnMut(&mut Mention)) {
    if let Agent::Every(m) = &mut h.agent {
        mention_tree(m, f);
    }
    h.target.iter_mut().for_each(|m| mention_tree(m, f));
    for list in [&mut h.objects, &mut h.alternatives, &mut h.such_that, &mut h.for_each] {
        list.iter_mut().for_each(|m| mention_tree(m, f));
    }
}

impl PropositionKind {
    /// Calls `f` on every noun phrase of the proposition.
    pub fn visit_mentions_mut(&mut self, f: &mut dyn FnMut(&mut Mention)) {
        match self {
            PropositionKind::Fact(m) => mention_tree(m, f),
            PropositionKind::Enumerative(EnumerativeDefinition::Relation { clause, when, .. }) => {
                clause_mentions(clause, f);
                when.iter_mut().for_each(|c| clause_mentions(c, f));
            }
            PropositionKind::WheneverThen(w) => {
                whenever_mentions(&mut w.whenevers, f);
                match &mut w.then {
                    Then::Must { agent, target } => {
                        if let Agent::Every(m) = agent {
                            mention_tree(m, f);
                        }
                        mention_tree(target, f);
                    }
                    Then::Can(h) => choice_mentions(h, f),
                }
            }
            PropositionKind::QuantifiedChoice(h) => choice_mentions(h, f),
            PropositionKind::Prohibited(b) | PropositionKind::Required(b) => {
                statement_mentions(&mut b.statement, f);
                whenever_mentions(&mut b.whenevers, f);
            }
            PropositionKind::Weak(w) => match &mut w.body {
                WeakBody::Aggregate(a) | WeakBody::AbsDifference { aggregate: a, .. } => aggregate_mentions(a, f),
                WeakBody::Statement { statement, whenevers } => {
                    statement_mentions(statement, f);
                    whenever_mentions(whenevers, f);
                }
                WeakBody::Objective { whenevers, .. } => whenever_mentions(whenevers, f),
            },
            _ => {}
        }
    }
}

// ---------------------------------------------------------------------------
// Rendering back to CNL

fn words(w: &[String]) -> String {
    w.join(" ")
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

fn join_list<T: Display>(items: &[T], last: &str) -> String {
    let mut out = String::new();
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(if i + 1 == items.len() { last } else { ", " });
        }
        write!(out, "{item}").unwrap();
    }
    out
}

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Display for Operand {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Term(t) => write!(f, "{t}"),
            Operand::Time { text, .. } | Operand::Date { text } => f.write_str(text),
            Operand::Binary { op, lhs, rhs } => write!(f, "{lhs}{}{rhs}", op.symbol()),
            Operand::Paren(e) => write!(f, "({e})"),
            Operand::Abs(e) => write!(f, "|{e}|"),
            Operand::Sum(items) => write!(f, "the sum between {}", join_list(items, ", and ")),
            Operand::Difference(a, b) => write!(f, "the difference between {a} and {b}"),
            Operand::Property { attribute, label, concept, entity } => {
                write!(f, "the {}", words(attribute))?;
                if let Some(l) = label {
                    write!(f, " {l}")?;
                }
                write!(f, " of the {} {entity}", words(concept))
            }
            Operand::Entity { concept, label } => write!(f, "the {} {label}", words(concept)),
        }
    }
}

impl Display for Condition {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Compare { word, rhs, unit } => {
                write!(f, "{} {rhs}", word.text())?;
                if let Some(u) = unit {
                    write!(f, " {}", words(u))?;
                }
                Ok(())
            }
            Condition::Temporal { negated, order, rhs } => {
                if *negated {
                    f.write_str("not ")?;
                }
                let w = if *order == Order::After { "after" } else { "before" };
                write!(f, "{w} {rhs}")
            }
            Condition::Between { low, high } => write!(f, "between {low} and {high}"),
            Condition::OneOf { values, respectively } => {
                f.write_str("one of ")?;
                if *respectively {
                    f.write_str("respectively ")?;
                }
                f.write_str(&join_list(values, ", "))
            }
        }
    }
}

impl Display for Shift {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let d = if self.direction == Direction::Next { "next" } else { "previous" };
        write!(f, "the {d}")?;
        if let Some(c) = &self.count {
            write!(f, " {c} consecutive")?;
        }
        write!(f, " {}", words(&self.unit))
    }
}

impl Display for WithClause {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if let Some((d, unit, anchor)) = &self.shift {
            let d = if *d == Direction::Next { "next" } else { "previous" };
            return write!(f, "with the {d} {} respect to {anchor}", words(unit));
        }
        write!(f, "with {}", words(&self.attribute))?;
        if let Some(v) = &self.value {
            write!(f, " {v}")?;
        }
        if let Some(c) = &self.condition {
            write!(f, " {c}")?;
        }
        Ok(())
    }
}

impl Display for Mention {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if let Some(a) = &self.article {
            write!(f, "{a} ")?;
        }
        f.write_str(&words(&self.concept))?;
        if let Some(l) = &self.label {
            write!(f, " {l}")?;
        }
        if let Some(s) = &self.shift {
            write!(f, " {s}")?;
        }
        for (i, w) in self.attributes.iter().enumerate() {
            let sep = if i == 0 {
                " "
            } else if i + 1 == self.attributes.len() {
                ", and "
            } else {
                ", "
            };
            write!(f, "{sep}{w}")?;
        }
        if let Some(c) = &self.condition {
            if matches!(c, Condition::Temporal { .. }) {
                write!(f, " {c}")?;
            } else {
                write!(f, " that is {c}")?;
            }
        }
        if let Some(rel) = &self.relation {
            write!(f, " {} {}", words(&rel.0), rel.1)?;
        }
        Ok(())
    }
}

impl Display for Clause {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        match &self.subject {
            Subject::Mention(m) => parts.push(m.to_string()),
            Subject::Shift(s) => parts.push(s.to_string()),
            Subject::None => {}
        }
        let mut verb = self.verb.clone();
        if self.negated {
            if verb.first().is_some_and(|w| matches!(w.as_str(), "is" | "are")) {
                verb.insert(1, "not".into());
            } else {
                let aux = if matches!(&self.subject, Subject::Mention(_) | Subject::Shift(_)) { "does" } else { "do" };
                verb.insert(0, "not".into());
                verb.insert(0, aux.into());
            }
        }
        if !verb.is_empty() {
            parts.push(words(&verb));
        }
        for o in &self.objects {
            if let Some(p) = &o.preposition {
                parts.push(p.clone());
            }
            parts.push(o.mention.to_string());
        }
        if !self.pairs.is_empty() {
            let pairs: Vec<String> = self.pairs.iter().map(|(a, v)| format!("{} {v}", words(a))).collect();
            parts.push(pairs.join(", "));
        }
        if let Some((n, unit)) = &self.window {
            parts.push(format!("for {n} consecutive {}", words(unit)));
        }
        f.write_str(&parts.join(" "))
    }
}

impl Display for WhereCondition {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{} is {}", self.subject, self.condition)
    }
}

impl Display for Whenever {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str("whenever there is ")?;
        if self.negated {
            f.write_str("not ")?;
        }
        f.write_str(&join_list(&self.mentions, ", "))
    }
}

impl Display for Quantity {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Bound(k, n) => {
                let w = match k {
                    QuantityKind::Exactly => "exactly",
                    QuantityKind::AtMost => "at most",
                    QuantityKind::AtLeast => "at least",
                };
                write!(f, "{w} {n}")
            }
            Quantity::Between(a, b) => write!(f, "between {a} and {b}"),
        }
    }
}

impl Display for Agent {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Agent::We => f.write_str("we"),
            Agent::Label(l) => write!(f, "{l}"),
            Agent::Every(m) => write!(f, "{m}"),
        }
    }
}

impl Display for ChoiceHead {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut parts = vec![self.agent.to_string(), "can".to_string(), words(&self.verb)];
        if let Some(q) = &self.quantity {
            parts.push(q.to_string());
        }
        if let Some(t) = &self.target {
            parts.push(t.to_string());
        }
        if let Some(l) = &self.link {
            parts.push(l.clone());
        }
        if let Some(q) = &self.link_quantity {
            parts.push(q.to_string());
        }
        if !self.objects.is_empty() {
            parts.push(join_list(&self.objects, ", and "));
        }
        for a in &self.alternatives {
            parts.push(format!("or {a}"));
        }
        if !self.such_that.is_empty() {
            parts.push(format!("such that there is {}", join_list(&self.such_that, ", ")));
        }
        if !self.for_each.is_empty() {
            let fe: Vec<String> = self.for_each.iter().map(|m| m.to_string()).collect();
            parts.push(format!("for each {}", fe.join(" and ")));
        }
        if let Some((n, unit)) = &self.duration {
            parts.push(format!("for {n} {}", words(unit)));
        }
        let text = parts.into_iter().filter(|p| !p.is_empty()).collect::<Vec<_>>().join(" ");
        f.write_str(&text)
    }
}

impl Display for Aggregate {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let func = match self.function {
            AggregateFunction::Number => "number",
            AggregateFunction::Total => "total",
            AggregateFunction::Lowest => "lowest",
            AggregateFunction::Highest => "highest",
        };
        write!(f, "the {func}")?;
        if let Some(a) = &self.attribute {
            if self.counted.is_some() {
                write!(f, " {}", words(a))?;
            } else {
                write!(f, " of {}", words(a))?;
            }
        }
        if let Some((n, unit)) = &self.window {
            write!(f, " of occurrences between each {n} {unit}")?;
        }
        if let Some(c) = &self.counted {
            write!(f, " of {c}")?;
        }
        if let Some(p) = &self.per {
            write!(f, " in {p}")?;
        }
        match &self.relation {
            Some(AggregateRelation::That { passive, clause }) => {
                f.write_str(if *passive { " that are " } else { " that " })?;
                write!(f, "{clause}")?;
            }
            Some(AggregateRelation::Where(clause)) => write!(f, " where {clause}")?,
            None => {}
        }
        if !self.for_each.is_empty() {
            let fe: Vec<String> = self.for_each.iter().map(|m| m.to_string()).collect();
            write!(f, " for each {}", fe.join(" and "))?;
        }
        Ok(())
    }
}

fn clauses(cs: &[Clause]) -> String {
    cs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" and also ")
}

impl Display for Statement {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Clauses(cs) => f.write_str(&clauses(cs)),
            Statement::WhenThen { when, then } => write!(f, "when {} then {}", clauses(when), clauses(then)),
            Statement::Aggregate { aggregate, condition } => write!(f, "{aggregate} is {condition}"),
            Statement::Comparison { lhs, condition } => write!(f, "{lhs} is {condition}"),
        }
    }
}

fn such_that_suffix(statement: &Statement) -> String {
    match statement {
        Statement::Aggregate { aggregate, .. } if !aggregate.such_that.is_empty() => {
            format!(", such that there is {}", join_list(&aggregate.such_that, ", "))
        }
        _ => String::new(),
    }
}

fn wheres(ws: &[WhereCondition]) -> String {
    if ws.is_empty() {
        return String::new();
    }
    let items: Vec<String> = ws.iter().map(|w| w.to_string()).collect();
    format!(", where {}", items.join(" and "))
}

fn whenevers(ws: &[Whenever]) -> String {
    ws.iter().map(|w| format!(", {w}")).collect()
}

impl Display for ConstraintBody {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}{}",
            self.statement,
            such_that_suffix(&self.statement),
            wheres(&self.wheres),
            whenevers(&self.whenevers)
        )
    }
}

impl Display for Proposition {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)
    }
}

fn art(a: &Option<String>) -> String {
    a.as_ref().map(|a| format!("{} ", capitalize(a))).unwrap_or_default()
}

fn det_list(items: &[Words], first_prefix: &str, prefix: &str) -> String {
    let mut out = String::new();
    for (i, w) in items.iter().enumerate() {
        let p = if i == 0 { first_prefix } else { prefix };
        write!(out, "{p}{}", words(w)).unwrap();
    }
    out
}

impl Display for PropositionKind {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            PropositionKind::Domain(d) => {
                write!(f, "{}{}", art(&d.article), words(&d.name))?;
                if !d.keys.is_empty() {
                    f.write_str(&det_list(&d.keys, " is identified by a ", ", and by a "))?;
                }
                if !d.params.is_empty() {
                    let first = if d.keys.is_empty() { " has a " } else { ", and has a " };
                    f.write_str(&det_list(&d.params, first, ", a "))?;
                }
                f.write_str(".")
            }
            PropositionKind::Temporal(t) => {
                write!(
                    f,
                    "{}{} is a temporal concept expressed in {} ranging from {} to {}",
                    art(&t.article),
                    words(&t.name),
                    t.unit.text(),
                    t.start,
                    t.end
                )?;
                if let Some((n, u)) = &t.step {
                    write!(f, " with a length of {n} {}", words(u))?;
                }
                f.write_str(".")
            }
            PropositionKind::Constant(c) => {
                write!(f, "{} is a constant", c.name)?;
                if let Some(v) = &c.value {
                    write!(f, " equal to {v}")?;
                }
                f.write_str(".")
            }
            PropositionKind::Compound(CompoundDefinition::Range { article, name, from, to, made_of }) => {
                write!(f, "{}{} goes from {from} to {to}", art(article), words(name))?;
                for (i, m) in made_of.iter().enumerate() {
                    let lead = if i == 0 { " and is made of " } else { " that are made of " };
                    write!(f, "{lead}{}", words(m))?;
                }
                f.write_str(".")
            }
            PropositionKind::Compound(CompoundDefinition::List { article, name, values, attributes }) => {
                write!(f, "{}{} is one of {}", art(article), words(name), join_list(values, ", "))?;
                for (attr, vals) in attributes {
                    let verb = if vals.len() == 1 { "is" } else { "are" };
                    write!(f, " and has {} that {verb} equal to respectively {}", words(attr), join_list(vals, ", "))?;
                }
                f.write_str(".")
            }
            PropositionKind::Enumerative(EnumerativeDefinition::Membership { value, article, concept }) => {
                write!(f, "{} is {article} {}.", capitalize(&value.to_string()), words(concept))
            }
            PropositionKind::Enumerative(EnumerativeDefinition::Relation { clause, when, wheres: ws }) => {
                let text = clause.to_string();
                write!(f, "{}", capitalize(&text))?;
                if !when.is_empty() {
                    write!(f, " when {}", clauses(when))?;
                }
                write!(f, "{}.", wheres(ws))
            }
            PropositionKind::WheneverThen(w) => {
                let ws: Vec<String> = w.whenevers.iter().map(|w| w.to_string()).collect();
                write!(f, "{}", capitalize(&ws.join(", ")))?;
                match &w.then {
                    Then::Must { agent, target } => write!(f, ", then {agent} must have {target}.")?,
                    Then::Can(head) => write!(f, ", then {head}.")?,
                }
                Ok(())
            }
            PropositionKind::Fact(m) => write!(f, "There is {m}."),
            PropositionKind::QuantifiedChoice(head) => write!(f, "{}.", capitalize(&head.to_string())),
            PropositionKind::Prohibited(body) => write!(f, "It is prohibited that {body}."),
            PropositionKind::Required(body) => write!(f, "It is required that {body}."),
            PropositionKind::Weak(w) => {
                f.write_str("It is preferred")?;
                match w.preference {
                    Some(Optimization::Maximize) => f.write_str(" as much as possible")?,
                    Some(Optimization::Minimize) => f.write_str(" as little as possible")?,
                    None => {}
                }
                let p = match w.priority {
                    Priority::Low => "low",
                    Priority::Medium => "medium",
                    Priority::High => "high",
                };
                write!(f, ", with {p} priority, that ")?;
                match &w.body {
                    WeakBody::Aggregate(a) => write!(f, "{a}")?,
                    WeakBody::AbsDifference { lhs, aggregate, range } => {
                        write!(f, "the difference in absolute value between {lhs}, and {aggregate}")?;
                        if let Some((lo, hi)) = range {
                            write!(f, " ranging between {lo} and {hi}")?;
                        }
                    }
                    WeakBody::Statement { statement, whenevers: ws } => {
                        write!(f, "{statement}{}{}", such_that_suffix(statement), whenevers(ws))?
                    }
                    WeakBody::Objective { whenevers: ws, target } => {
                        let items: Vec<String> = ws.iter().map(|w| w.to_string()).collect();
                        write!(f, "{}, {target}", items.join(", "))?;
                    }
                }
                match w.objective {
                    Some(Optimization::Maximize) => f.write_str(" is maximized")?,
                    Some(Optimization::Minimize) => f.write_str(" is minimized")?,
                    None => {}
                }
                write!(f, "{}.", wheres(&w.wheres))
            }
        }
    }
}
