mod common;

use cnlc::asp::{CompareOp, Comparison, Term};
use cnlc::ast::PropositionKind;
use cnlc::compile::{compile_program, compile_source};
use cnlc::safety::{is_safe, unsafe_variables};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn term() -> impl Strategy<Value = Term> {
    prop_oneof![(-50i64..50).prop_map(Term::Num), "[A-Z][a-z0-9]{0,3}".prop_map(|v| Term::var(&v))]
}

fn op() -> impl Strategy<Value = CompareOp> {
    proptest::sample::select(CompareOp::ALL.to_vec())
}

proptest! {
    #[test]
    fn negation_is_an_involution(op in op(), lhs in term(), rhs in term()) {
        prop_assert_eq!(op.negate().negate(), op);
        let c = Comparison::new(op, lhs, rhs);
        let back = c.negated().negated();
        prop_assert_eq!((back.op, &back.lhs, &back.rhs), (c.op, &c.lhs, &c.rhs));
    }

    #[test]
    fn negation_is_the_complement(op in op(), a in -20i64..20, b in -20i64..20) {
        prop_assert_eq!(op.negate().eval(a, b), !op.eval(a, b));
        prop_assert_eq!(op.mirror().eval(b, a), op.eval(a, b));
    }
}

fn permuted_kind(kind: &PropositionKind) -> bool {
    matches!(
        kind,
        PropositionKind::Fact(_) | PropositionKind::Prohibited(_) | PropositionKind::Required(_) | PropositionKind::Weak(_)
    )
}

#[test]
fn with_clause_order_is_irrelevant() {
    let mut rng = StdRng::seed_from_u64(11);
    let mut checked = 0;
    for case in common::load_cases() {
        let doc = common::parse(&case.input);
        let reference = compile_source(&common::render(&doc)).unwrap();
        for i in 0..doc.propositions.len() {
            if !permuted_kind(&doc.propositions[i].kind) {
                continue;
            }
            for _ in 0..20 {
                let shuffled = common::render(&common::shuffle_withs(&doc, i, &mut rng));
                let out = compile_source(&shuffled).unwrap();
                assert_eq!(out, reference, "{}: proposition {} reordered as\n{shuffled}", case.name, i + 1);
                checked += 1;
            }
        }
    }
    assert!(checked >= 20 * 30, "only {checked} permutations");
}

#[test]
fn rendering_round_trips() {
    for case in common::load_cases() {
        let doc = common::parse(&case.input);
        let again = common::parse(&common::render(&doc));
        assert_eq!(
            doc.propositions.iter().map(|p| &p.kind).collect::<Vec<_>>(),
            again.propositions.iter().map(|p| &p.kind).collect::<Vec<_>>(),
            "{}",
            case.name
        );
        assert_eq!(compile_source(&case.input).unwrap(), compile_source(&common::render(&doc)).unwrap());
    }
}

#[test]
fn corpus_rules_are_safe() {
    for case in common::load_cases() {
        for s in compile_program(&case.input).unwrap().statements {
            assert!(is_safe(&s), "{}: {s} has unsafe {:?}", case.name, unsafe_variables(&s));
        }
    }
}

#[test]
fn random_documents_compile_to_safe_rules() {
    let mut rng = StdRng::seed_from_u64(7);
    for n in 0..500 {
        let source = common::random_document(&mut rng);
        let program = compile_program(&source).unwrap_or_else(|e| panic!("document {n} rejected: {e:?}\n{source}"));
        assert!(!program.statements.is_empty());
        for s in &program.statements {
            assert!(is_safe(s), "document {n}: {s}\n{source}");
        }
    }
}

#[test]
fn safety_check_has_teeth() {
    let program = compile_program("A node goes from 1 to 3.\nNode 1 is chosen.\n").unwrap();
    let mut fact = program.statements.last().unwrap().clone();
    assert!(is_safe(&fact));
    fact.visit_terms_mut(&mut |t| {
        if *t == Term::Num(1) {
            *t = Term::var("X");
        }
    });
    assert!(!is_safe(&fact));
    assert_eq!(unsafe_variables(&fact), vec![Term::var("X")]);
}
