//! ASP program model and its textual rendering.

use std::collections::BTreeMap;
use std::fmt::{self, Display, Formatter};

pub use crate::ast::ArithOp;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    /// Compiler-generated variable, rendered `_X<n>`.
    Gen(u32),
    Anon,
    /// Constant symbol (`timemax`).
    Sym(String),
    Num(i64),
    Str(String),
    Func(String, Vec<Term>),
    Range(Box<Term>, Box<Term>),
    Arith(ArithOp, Box<Term>, Box<Term>),
    Neg(Box<Term>),
    Abs(Box<Term>),
    /// `(t)\m`
    Mod(Box<Term>, i64),
    Paren(Box<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn func(name: &str, args: Vec<Term>) -> Term {
        Term::Func(name.to_string(), args)
    }

    pub fn arith(op: ArithOp, lhs: Term, rhs: Term) -> Term {
        Term::Arith(op, Box::new(lhs), Box::new(rhs))
    }

    /// `self + n` (or `self - |n|`), folding numbers.
    pub fn offset(self, n: i64) -> Term {
        match (self, n) {
            (t, 0) => t,
            (Term::Num(a), n) => Term::Num(a + n),
            (t, n) if n > 0 => Term::arith(ArithOp::Add, t, Term::Num(n)),
            (t, n) => Term::arith(ArithOp::Sub, t, Term::Num(-n)),
        }
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Var(_) | Term::Gen(_))
    }

    pub fn is_arithmetic(&self) -> bool {
        matches!(self, Term::Arith(..) | Term::Abs(_) | Term::Neg(_) | Term::Paren(_) | Term::Mod(..))
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        f(self);
        match self {
            Term::Func(_, args) => args.iter().for_each(|a| a.visit(f)),
            Term::Range(a, b) | Term::Arith(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Term::Neg(a) | Term::Abs(a) | Term::Mod(a, _) | Term::Paren(a) => a.visit(f),
            _ => {}
        }
    }

    pub fn visit_mut(&mut self, f: &mut impl FnMut(&mut Term)) {
        f(self);
        match self {
            Term::Func(_, args) => args.iter_mut().for_each(|a| a.visit_mut(f)),
            Term::Range(a, b) | Term::Arith(_, a, b) => {
                a.visit_mut(f);
                b.visit_mut(f);
            }
            Term::Neg(a) | Term::Abs(a) | Term::Mod(a, _) | Term::Paren(a) => a.visit_mut(f),
            _ => {}
        }
    }

    /// Variables occurring anywhere in the term, in order.
    pub fn variables(&self) -> Vec<Term> {
        let mut out = Vec::new();
        self.visit(&mut |t| {
            if t.is_variable() && !out.contains(t) {
                out.push(t.clone());
            }
        });
        out
    }

    /// Variables bound by this term as an atom argument: direct variables
    /// and variables nested in function terms, but not inside arithmetic.
    pub fn binding_variables(&self, out: &mut Vec<Term>) {
        match self {
            Term::Var(_) | Term::Gen(_) => out.push(self.clone()),
            Term::Func(_, args) => args.iter().for_each(|a| a.binding_variables(out)),
            _ => {}
        }
    }
}

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Gen(n) => write!(f, "_X{n}"),
            Term::Anon => f.write_str("_"),
            Term::Sym(s) => f.write_str(s),
            Term::Num(n) => write!(f, "{n}"),
            Term::Str(s) => write!(f, "\"{s}\""),
            Term::Func(name, args) => write!(f, "{name}({})", join(args, ",")),
            Term::Range(a, b) => write!(f, "{a}..{b}"),
            Term::Arith(op, a, b) => write!(f, "{a}{}{b}", op.symbol()),
            Term::Neg(a) => write!(f, "-{a}"),
            Term::Abs(a) => write!(f, "|{a}|"),
            Term::Mod(a, m) => write!(f, "({a})\\{m}"),
            Term::Paren(a) => write!(f, "({a})"),
        }
    }
}

fn join<T: Display>(items: &[T], sep: &str) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(sep)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Atom {
        Atom { predicate: predicate.to_string(), args }
    }
}

impl Display for Atom {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            f.write_str(&self.predicate)
        } else {
            write!(f, "{}({})", self.predicate, join(&self.args, ","))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    pub const ALL: [CompareOp; 6] = [CompareOp::Eq, CompareOp::Ne, CompareOp::Lt, CompareOp::Le, CompareOp::Gt, CompareOp::Ge];

    /// Logical complement.
    pub fn negate(self) -> CompareOp {
        match self {
            CompareOp::Eq => CompareOp::Ne,
            CompareOp::Ne => CompareOp::Eq,
            CompareOp::Lt => CompareOp::Ge,
            CompareOp::Ge => CompareOp::Lt,
            CompareOp::Gt => CompareOp::Le,
            CompareOp::Le => CompareOp::Gt,
        }
    }

    /// Operator after swapping both sides.
    pub fn mirror(self) -> CompareOp {
        match self {
            CompareOp::Lt => CompareOp::Gt,
            CompareOp::Gt => CompareOp::Lt,
            CompareOp::Le => CompareOp::Ge,
            CompareOp::Ge => CompareOp::Le,
            other => other,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }

    pub fn eval(self, a: i64, b: i64) -> bool {
        match self {
            CompareOp::Eq => a == b,
            CompareOp::Ne => a != b,
            CompareOp::Lt => a < b,
            CompareOp::Le => a <= b,
            CompareOp::Gt => a > b,
            CompareOp::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub op: CompareOp,
    pub lhs: Term,
    pub rhs: Term,
    /// Spell equality as `==`.
    pub double_eq: bool,
}

impl Comparison {
    pub fn new(op: CompareOp, lhs: Term, rhs: Term) -> Comparison {
        Comparison { op, lhs, rhs, double_eq: false }
    }

    /// Negation; the complement of `!=` is spelled `==`.
    pub fn negated(&self) -> Comparison {
        let op = self.op.negate();
        Comparison { op, lhs: self.lhs.clone(), rhs: self.rhs.clone(), double_eq: self.op == CompareOp::Ne }
    }

    /// Puts a plain variable on the left when the other side is arithmetic.
    pub fn variable_left(self) -> Comparison {
        if !self.lhs.is_variable() && self.rhs.is_variable() && self.lhs.is_arithmetic() {
            Comparison { op: self.op.mirror(), lhs: self.rhs, rhs: self.lhs, double_eq: self.double_eq }
        } else {
            self
        }
    }
}

impl Display for Comparison {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let op = if self.double_eq && self.op == CompareOp::Eq { "==" } else { self.op.symbol() };
        write!(f, "{} {op} {}", self.lhs, self.rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateFunction {
    Count,
    Sum,
    Min,
    Max,
}

impl AggregateFunction {
    pub fn name(self) -> &'static str {
        match self {
            AggregateFunction::Count => "#count",
            AggregateFunction::Sum => "#sum",
            AggregateFunction::Min => "#min",
            AggregateFunction::Max => "#max",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateElement {
    pub terms: Vec<Term>,
    pub condition: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregate {
    pub function: AggregateFunction,
    pub elements: Vec<AggregateElement>,
    pub op: CompareOp,
    pub guard: Term,
}

impl Display for Aggregate {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let elems: Vec<String> =
            self.elements.iter().map(|e| format!("{}: {}", join(&e.terms, ","), join(&e.condition, ", "))).collect();
        write!(f, "{}{{{}}} {} {}", self.function.name(), elems.join("; "), self.op.symbol(), self.guard)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Cmp(Comparison),
    Agg(Aggregate),
}

impl Literal {
    pub fn visit_terms<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => a.args.iter().for_each(|t| t.visit(f)),
            Literal::Cmp(c) => {
                c.lhs.visit(f);
                c.rhs.visit(f);
            }
            Literal::Agg(a) => {
                for e in &a.elements {
                    e.terms.iter().for_each(|t| t.visit(f));
                    e.condition.iter().for_each(|l| l.visit_terms(f));
                }
                a.guard.visit(f);
            }
        }
    }

    pub fn visit_terms_mut(&mut self, f: &mut impl FnMut(&mut Term)) {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => a.args.iter_mut().for_each(|t| t.visit_mut(f)),
            Literal::Cmp(c) => {
                c.lhs.visit_mut(f);
                c.rhs.visit_mut(f);
            }
            Literal::Agg(a) => {
                for e in &mut a.elements {
                    e.terms.iter_mut().for_each(|t| t.visit_mut(f));
                    e.condition.iter_mut().for_each(|l| l.visit_terms_mut(f));
                }
                a.guard.visit_mut(f);
            }
        }
    }
}

impl Display for Literal {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => write!(f, "{a}"),
            Literal::Neg(a) => write!(f, "not {a}"),
            Literal::Cmp(c) => write!(f, "{c}"),
            Literal::Agg(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceElement {
    pub atom: Atom,
    pub condition: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Head {
    /// Integrity constraint.
    Empty,
    /// One atom, or a disjunction of several.
    Disjunction(Vec<Atom>),
    Choice { lower: Option<Term>, upper: Option<Term>, elements: Vec<ChoiceElement> },
}

impl Display for Head {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Head::Empty => Ok(()),
            Head::Disjunction(atoms) => f.write_str(&join(atoms, " | ")),
            Head::Choice { lower, upper, elements } => {
                if let Some(l) = lower {
                    write!(f, "{l} <= ")?;
                }
                let elems: Vec<String> = elements
                    .iter()
                    .map(|e| {
                        if e.condition.is_empty() {
                            e.atom.to_string()
                        } else {
                            format!("{}: {}", e.atom, join(&e.condition, ", "))
                        }
                    })
                    .collect();
                write!(f, "{{{}}}", elems.join("; "))?;
                if let Some(u) = upper {
                    write!(f, " <= {u}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub head: Head,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn fact(atom: Atom) -> Rule {
        Rule { head: Head::Disjunction(vec![atom]), body: Vec::new() }
    }

    pub fn constraint(body: Vec<Literal>) -> Rule {
        Rule { head: Head::Empty, body }
    }
}

impl Display for Rule {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match (&self.head, self.body.is_empty()) {
            (Head::Empty, _) => write!(f, ":- {}.", join(&self.body, ", ")),
            (h, true) => write!(f, "{h}."),
            (h, false) => write!(f, "{h} :- {}.", join(&self.body, ", ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeakConstraint {
    pub body: Vec<Literal>,
    pub weight: Term,
    pub level: i64,
    pub terms: Vec<Term>,
}

impl Display for WeakConstraint {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, ":~ {}. [{}@{}", join(&self.body, ", "), self.weight, self.level)?;
        for t in &self.terms {
            write!(f, ", {t}")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Rule(Rule),
    Weak(WeakConstraint),
}

impl Statement {
    /// Every term in rendering order.
    pub fn visit_terms<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        match self {
            Statement::Rule(r) => {
                match &r.head {
                    Head::Empty => {}
                    Head::Disjunction(atoms) => atoms.iter().for_each(|a| a.args.iter().for_each(|t| t.visit(f))),
                    Head::Choice { lower, upper, elements } => {
                        lower.iter().for_each(|t| t.visit(f));
                        for e in elements {
                            e.atom.args.iter().for_each(|t| t.visit(f));
                            e.condition.iter().for_each(|l| l.visit_terms(f));
                        }
                        upper.iter().for_each(|t| t.visit(f));
                    }
                }
                r.body.iter().for_each(|l| l.visit_terms(f));
            }
            Statement::Weak(w) => {
                w.body.iter().for_each(|l| l.visit_terms(f));
                w.weight.visit(f);
                w.terms.iter().for_each(|t| t.visit(f));
            }
        }
    }

    pub fn visit_terms_mut(&mut self, f: &mut impl FnMut(&mut Term)) {
        match self {
            Statement::Rule(r) => {
                match &mut r.head {
                    Head::Empty => {}
                    Head::Disjunction(atoms) => atoms.iter_mut().for_each(|a| a.args.iter_mut().for_each(|t| t.visit_mut(f))),
                    Head::Choice { lower, upper, elements } => {
                        lower.iter_mut().for_each(|t| t.visit_mut(f));
                        for e in elements {
                            e.atom.args.iter_mut().for_each(|t| t.visit_mut(f));
                            e.condition.iter_mut().for_each(|l| l.visit_terms_mut(f));
                        }
                        upper.iter_mut().for_each(|t| t.visit_mut(f));
                    }
                }
                r.body.iter_mut().for_each(|l| l.visit_terms_mut(f));
            }
            Statement::Weak(w) => {
                w.body.iter_mut().for_each(|l| l.visit_terms_mut(f));
                w.weight.visit_mut(f);
                w.terms.iter_mut().for_each(|t| t.visit_mut(f));
            }
        }
    }

    /// Generated variables in order of first appearance.
    pub fn generated(&self) -> Vec<u32> {
        let mut out = Vec::new();
        self.visit_terms(&mut |t| {
            if let Term::Gen(n) = t {
                if !out.contains(n) {
                    out.push(*n);
                }
            }
        });
        out
    }

    /// Renumbers generated variables by first appearance, starting after `offset`.
    /// Returns the number of distinct generated variables.
    pub fn renumber(&mut self, offset: u32) -> u32 {
        let order = self.generated();
        let map: BTreeMap<u32, u32> = order.iter().enumerate().map(|(i, g)| (*g, offset + i as u32 + 1)).collect();
        self.visit_terms_mut(&mut |t| {
            if let Term::Gen(n) = t {
                *n = map[n];
            }
        });
        order.len() as u32
    }

    /// Predicate name and arity of every atom.
    pub fn predicates(&self) -> Vec<(String, usize)> {
        fn lits(ls: &[Literal], out: &mut Vec<(String, usize)>) {
            for l in ls {
                match l {
                    Literal::Pos(a) | Literal::Neg(a) => out.push((a.predicate.clone(), a.args.len())),
                    Literal::Agg(g) => g.elements.iter().for_each(|e| lits(&e.condition, out)),
                    Literal::Cmp(_) => {}
                }
            }
        }
        let mut out = Vec::new();
        match self {
            Statement::Rule(r) => {
                match &r.head {
                    Head::Empty => {}
                    Head::Disjunction(atoms) => atoms.iter().for_each(|a| out.push((a.predicate.clone(), a.args.len()))),
                    Head::Choice { elements, .. } => {
                        for e in elements {
                            out.push((e.atom.predicate.clone(), e.atom.args.len()));
                            lits(&e.condition, &mut out);
                        }
                    }
                }
                lits(&r.body, &mut out);
            }
            Statement::Weak(w) => lits(&w.body, &mut out),
        }
        out
    }
}

impl Display for Statement {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Rule(r) => write!(f, "{r}"),
            Statement::Weak(w) => write!(f, "{w}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub statements: Vec<Statement>,
}

impl Display for Program {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for s in &self.statements {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negate_is_an_involution() {
        for op in CompareOp::ALL {
            assert_eq!(op.negate().negate(), op);
            assert_ne!(op.negate(), op);
            assert_eq!(op.mirror().mirror(), op);
        }
    }

    #[test]
    fn negated_inequality_renders_double_equals() {
        let c = Comparison::new(CompareOp::Ne, Term::var("A"), Term::var("B"));
        assert_eq!(c.negated().to_string(), "A == B");
        assert_eq!(c.negated().negated().to_string(), "A != B");
    }

    #[test]
    fn variable_moves_left() {
        let sum = Term::arith(ArithOp::Add, Term::var("A"), Term::Sym("g".into()));
        let c = Comparison::new(CompareOp::Lt, sum, Term::var("B")).variable_left();
        assert_eq!(c.to_string(), "B > A+g");
    }

    #[test]
    fn renders_rules() {
        let head = Head::Choice {
            lower: Some(Term::Num(1)),
            upper: Some(Term::Num(1)),
            elements: vec![ChoiceElement {
                atom: Atom::new("assigned_to", vec![Term::Gen(7), Term::Gen(3)]),
                condition: vec![Literal::Pos(Atom::new("color", vec![Term::Anon, Term::Gen(3)]))],
            }],
        };
        let mut s = Statement::Rule(Rule { head, body: vec![Literal::Pos(Atom::new("node", vec![Term::Gen(7)]))] });
        assert_eq!(s.renumber(0), 2);
        assert_eq!(s.to_string(), "1 <= {assigned_to(_X1,_X2): color(_,_X2)} <= 1 :- node(_X1).");
    }

    #[test]
    fn renders_weak_constraints() {
        let w = WeakConstraint {
            body: vec![Literal::Pos(Atom::new("p", vec![Term::var("V"), Term::var("I")]))],
            weight: Term::Neg(Box::new(Term::var("V"))),
            level: 2,
            terms: vec![Term::var("I")],
        };
        assert_eq!(w.to_string(), ":~ p(V,I). [-V@2, I]");
    }
}
