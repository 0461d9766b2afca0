//! Variable safety of generated rules.
//!
//! A variable is bound when it occurs as an argument of a positive atom
//! (possibly nested in a function term, but not inside arithmetic), as the
//! guard of an `= V` aggregate, or as one side of `V = expr` whose other
//! side is bound. Variables local to an aggregate or choice element must be
//! bound by the element's own condition.

use std::collections::BTreeSet;

use crate::asp::{CompareOp, Head, Literal, Statement, Term};

fn closure(literals: &[Literal], initial: &BTreeSet<Term>) -> BTreeSet<Term> {
    let mut bound = initial.clone();
    loop {
        let before = bound.len();
        for l in literals {
            match l {
                Literal::Pos(a) => {
                    let mut vs = Vec::new();
                    a.args.iter().for_each(|t| t.binding_variables(&mut vs));
                    bound.extend(vs);
                }
                Literal::Cmp(c) if c.op == CompareOp::Eq => {
                    if c.lhs.is_variable() && c.rhs.variables().iter().all(|v| bound.contains(v)) {
                        bound.insert(c.lhs.clone());
                    }
                    if c.rhs.is_variable() && c.lhs.variables().iter().all(|v| bound.contains(v)) {
                        bound.insert(c.rhs.clone());
                    }
                }
                Literal::Agg(g) if g.op == CompareOp::Eq && g.guard.is_variable() => {
                    bound.insert(g.guard.clone());
                }
                _ => {}
            }
        }
        if bound.len() == before {
            return bound;
        }
    }
}

fn literal_vars(l: &Literal, out: &mut Vec<Term>) {
    l.visit_terms(&mut |t| {
        if t.is_variable() {
            out.push(t.clone());
        }
    });
}

/// Variables occurring outside aggregate elements.
fn outer_vars(body: &[Literal], out: &mut Vec<Term>) {
    for l in body {
        match l {
            Literal::Agg(g) => out.extend(g.guard.variables()),
            other => literal_vars(other, out),
        }
    }
}

fn check_elements(body: &[Literal], bound: &BTreeSet<Term>, bad: &mut BTreeSet<Term>) {
    for l in body {
        if let Literal::Agg(g) = l {
            for e in &g.elements {
                let local = closure(&e.condition, bound);
                let mut need = Vec::new();
                e.terms.iter().for_each(|t| need.extend(t.variables()));
                e.condition.iter().for_each(|c| literal_vars(c, &mut need));
                bad.extend(need.into_iter().filter(|v| !local.contains(v)));
            }
        }
    }
}

/// Unbound variables of a statement, sorted; empty when the statement is safe.
pub fn unsafe_variables(statement: &Statement) -> Vec<Term> {
    let mut bad = BTreeSet::new();
    match statement {
        Statement::Rule(r) => {
            let bound = closure(&r.body, &BTreeSet::new());
            let mut need = Vec::new();
            outer_vars(&r.body, &mut need);
            match &r.head {
                Head::Empty => {}
                Head::Disjunction(atoms) => atoms.iter().for_each(|a| a.args.iter().for_each(|t| need.extend(t.variables()))),
                Head::Choice { lower, upper, elements } => {
                    lower.iter().chain(upper.iter()).for_each(|t| need.extend(t.variables()));
                    for e in elements {
                        let local = closure(&e.condition, &bound);
                        let mut el = Vec::new();
                        e.atom.args.iter().for_each(|t| el.extend(t.variables()));
                        e.condition.iter().for_each(|c| literal_vars(c, &mut el));
                        bad.extend(el.into_iter().filter(|v| !local.contains(v)));
                    }
                }
            }
            bad.extend(need.into_iter().filter(|v| !bound.contains(v)));
            check_elements(&r.body, &bound, &mut bad);
        }
        Statement::Weak(w) => {
            let bound = closure(&w.body, &BTreeSet::new());
            let mut need = Vec::new();
            outer_vars(&w.body, &mut need);
            need.extend(w.weight.variables());
            w.terms.iter().for_each(|t| need.extend(t.variables()));
            bad.extend(need.into_iter().filter(|v| !bound.contains(v)));
            check_elements(&w.body, &bound, &mut bad);
        }
    }
    bad.into_iter().collect()
}

pub fn is_safe(statement: &Statement) -> bool {
    unsafe_variables(statement).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asp::*;

    fn pos(p: &str, args: Vec<Term>) -> Literal {
        Literal::Pos(Atom::new(p, args))
    }

    #[test]
    fn negative_literal_needs_binding() {
        let r = Rule::constraint(vec![Literal::Neg(Atom::new("payed", vec![Term::Gen(1)]))]);
        assert_eq!(unsafe_variables(&Statement::Rule(r.clone())), vec![Term::Gen(1)]);
        let mut r = r;
        r.body.push(pos("waiter", vec![Term::Gen(1)]));
        assert!(is_safe(&Statement::Rule(r)));
    }

    #[test]
    fn arithmetic_does_not_bind() {
        let r = Rule::constraint(vec![pos("day", vec![Term::arith(ArithOp::Add, Term::var("D"), Term::var("W")), Term::Anon])]);
        assert_eq!(unsafe_variables(&Statement::Rule(r)).len(), 2);
    }

    #[test]
    fn assignment_and_aggregate_guard_bind() {
        let agg = Aggregate {
            function: AggregateFunction::Count,
            elements: vec![AggregateElement { terms: vec![Term::var("D")], condition: vec![pos("w", vec![Term::var("N"), Term::var("D")])] }],
            op: CompareOp::Eq,
            guard: Term::var("T"),
        };
        let w = WeakConstraint {
            body: vec![
                pos("nurse", vec![Term::var("N")]),
                Literal::Agg(agg),
                Literal::Cmp(Comparison::new(CompareOp::Eq, Term::var("R"), Term::Abs(Box::new(Term::var("T"))))),
            ],
            weight: Term::var("R"),
            level: 3,
            terms: vec![Term::var("N")],
        };
        assert!(is_safe(&Statement::Weak(w)));
    }

    #[test]
    fn choice_element_locals_bound_by_condition() {
        let head = Head::Choice {
            lower: None,
            upper: None,
            elements: vec![ChoiceElement { atom: Atom::new("serve", vec![Term::Gen(1), Term::Gen(2)]), condition: vec![] }],
        };
        let r = Rule { head, body: vec![pos("waiter", vec![Term::Gen(1)])] };
        assert_eq!(unsafe_variables(&Statement::Rule(r)), vec![Term::Gen(2)]);
    }
}
