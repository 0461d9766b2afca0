//! One PASS/FAIL/SKIP line per acceptance criterion.
//!
//! Tolerances: golden comparisons are exact after normalization, counts
//! are exact, runtimes are wall-clock limits of 1 s, 1 s and 5 s for the
//! whole criterion (debug build included).

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use cnlc::asp::{CompareOp, Comparison, Literal, Statement, Term};
use cnlc::ast::PropositionKind;
use cnlc::compile::{compile_program, compile_source, compile_with_registry};
use cnlc::corpus::{run_case, Case};
use cnlc::safety::is_safe;
use cnlc::solver::smoke_check;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const PROBLEMS: [&str; 3] = ["graph_coloring", "hamiltonian_path", "maximal_clique"];
const ENCODINGS: [&str; 3] = ["nurse_scheduling", "dual_arm_manipulation", "chemotherapy_scheduling"];

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let r = f();
    (r, t.elapsed())
}

fn case<'a>(cases: &'a [Case], name: &str) -> &'a Case {
    cases.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("missing case {name}"))
}

fn masked_text(c: &Case) -> Vec<String> {
    let stmts = cnlc::corpus::split_statements(&c.expected);
    c.config
        .exceptions
        .iter()
        .flat_map(|e| stmts.iter().filter(move |s| s.line == e.line).map(|s| cnlc::corpus::normalize(&s.text)))
        .collect()
}

fn snippets(cases: &[Case]) -> Outcome {
    let selected: Vec<&Case> =
        cases.iter().filter(|c| !PROBLEMS.contains(&c.name.as_str()) && !ENCODINGS.contains(&c.name.as_str())).collect();
    let (reports, time) = timed(|| selected.iter().map(|c| run_case(c)).collect::<Vec<_>>());
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.name.as_str()).collect();
    // The exactly-one choice bound lives in the graph coloring listing.
    let mut masks: Vec<String> = selected.iter().flat_map(|c| masked_text(c)).collect();
    masks.extend(masked_text(case(cases, "graph_coloring")).into_iter().filter(|s| s.contains("}=1")));
    let expected_masks = masks.len() == 2 && masks[0].contains(">=3") && masks[1].contains("}=1");
    verdict(
        failed.is_empty() && expected_masks && time < Duration::from_secs(1),
        format!("{} cases, failed {failed:?}, masks {masks:?}, {time:?}", selected.len()),
    )
}

fn problems(cases: &[Case]) -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    let (_, time) = timed(|| {
        for (name, lines) in PROBLEMS.iter().zip([7, 12, 9]) {
            let c = case(cases, name);
            let report = run_case(c);
            let out = compile_source(&c.input).unwrap_or_default();
            let n = out.lines().count();
            let extra = if *name == "hamiltonian_path" { out.lines().any(|l| l == "reachable(1).") } else { true };
            ok &= report.passed() && n == lines && extra;
            details.push(format!("{name} {n}/{lines} lines ({} masked)", report.masked));
        }
    });
    verdict(ok && time < Duration::from_secs(1), format!("{}, {time:?}", details.join(", ")))
}

/// Variables in angle positions: arguments of `angle(..)` and the desired
/// and initial angle of `rotation/5`.
fn angle_variables(s: &Statement) -> BTreeSet<Term> {
    fn collect(t: &Term, out: &mut BTreeSet<Term>) {
        if let Term::Func(name, args) = t {
            if name == "angle" {
                args.iter().flat_map(|a| a.variables()).for_each(|v| {
                    out.insert(v);
                });
            }
            args.iter().for_each(|a| collect(a, out));
        }
    }
    let mut out = BTreeSet::new();
    if let Statement::Rule(r) = s {
        for lit in &r.body {
            if let Literal::Pos(a) | Literal::Neg(a) = lit {
                a.args.iter().for_each(|t| collect(t, &mut out));
                if a.predicate == "rotation" {
                    a.args.iter().skip(2).take(2).filter(|t| t.is_variable()).for_each(|t| {
                        out.insert(t.clone());
                    });
                }
            }
        }
    }
    out
}

fn comparisons(s: &Statement) -> Vec<&Comparison> {
    match s {
        Statement::Rule(r) => r.body.iter().filter_map(|l| if let Literal::Cmp(c) = l { Some(c) } else { None }).collect(),
        Statement::Weak(w) => w.body.iter().filter_map(|l| if let Literal::Cmp(c) = l { Some(c) } else { None }).collect(),
    }
}

fn unwrapped_angle_sides(c: &Case) -> (usize, usize) {
    let program = compile_program(&c.input).unwrap();
    let (mut wrapped, mut bare) = (0, 0);
    for s in &program.statements {
        let angles = angle_variables(s);
        for cmp in comparisons(s) {
            for side in [&cmp.lhs, &cmp.rhs] {
                if side.variables().iter().any(|v| angles.contains(v)) {
                    if matches!(side, Term::Mod(_, 360)) {
                        wrapped += 1;
                    } else {
                        bare += 1;
                    }
                }
            }
        }
    }
    (wrapped, bare)
}

fn label_facts(out: &str, predicate: &str) -> usize {
    out.split_whitespace().filter(|s| s.starts_with(&format!("{predicate}(")) && s.ends_with("\").")).count()
}

fn encodings(cases: &[Case]) -> Outcome {
    let (results, time) = timed(|| {
        ENCODINGS.iter().map(|n| (run_case(case(cases, n)), compile_source(&case(cases, n).input).unwrap_or_default())).collect::<Vec<_>>()
    });
    let failed: Vec<&str> = results.iter().filter(|(r, _)| !r.passed()).map(|(r, _)| r.name.as_str()).collect();
    let cts = &results[2].1;
    let mao = &results[1].1;
    let timeslots = label_facts(cts, "timeslot");
    let days = label_facts(cts, "day");
    let times = mao.split_whitespace().filter_map(|s| s.strip_prefix("time(")?.strip_suffix(").")?.parse::<i64>().ok()).count();
    let (wrapped, bare) = unwrapped_angle_sides(case(cases, "dual_arm_manipulation"));
    let support = cts.contains("_generated_support");
    let masked: usize = results.iter().map(|(r, _)| r.masked).sum();
    verdict(
        failed.is_empty() && timeslots == 36 && days == 7 && times == 10 && wrapped > 0 && bare == 0 && support && time < Duration::from_secs(5),
        format!(
            "failed {failed:?}, {masked} masked, timeslot {timeslots}/36, day {days}/7, time {times}/10, angle sides wrapped {wrapped} bare {bare}, support {support}, {time:?}"
        ),
    )
}

fn clock_12h(minutes: u32) -> String {
    let (h, m) = (minutes / 60, minutes % 60);
    let h12 = if h % 12 == 0 { 12 } else { h % 12 };
    format!("{h12:02}:{m:02} {}", if h < 12 { "AM" } else { "PM" })
}

/// Days since 1970-01-01 (proleptic Gregorian).
fn days_from_civil(y: i64, m: i64, d: i64) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let doy = (153 * ((m + 9) % 12) + 2) / 5 + d - 1;
    era * 146097 + yoe * 365 + yoe / 4 - yoe / 100 + doy - 719468
}

fn civil_from_days(z: i64) -> String {
    let z = z + 719468;
    let era = z.div_euclid(146097);
    let doe = z - era * 146097;
    let yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = yoe + era * 400 + i64::from(m <= 2);
    format!("{d:02}/{m:02}/{y}")
}

fn labels(out: &str, predicate: &str) -> Vec<String> {
    out.split_whitespace()
        .filter_map(|s| s.strip_prefix(&format!("{predicate}(")))
        .map(|s| s.split_once(',').map(|(_, l)| l.trim_end_matches(").").trim_matches('"').to_string()).unwrap_or_default())
        .collect()
}

fn temporal() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut bad = Vec::new();
    let mut minutes = 0;
    while minutes < 200 {
        let (start, step, count) = (rng.gen_range(0..1380u32), rng.gen_range(1..90u32), rng.gen_range(1..40u32));
        let end = start + step * count;
        if end >= 24 * 60 {
            continue;
        }
        minutes += 1;
        let src = format!(
            "A slot is a temporal concept expressed in minutes ranging from {} to {} with a length of {step} minutes.",
            clock_12h(start),
            clock_12h(end)
        );
        let got = labels(&compile_source(&src).unwrap_or_default(), "slot");
        let oracle: Vec<String> = (start..end).step_by(step as usize).map(|m| format!("{:02}:{:02}", m / 60, m % 60)).collect();
        if got.len() as u32 != (end - start) / step || got != oracle {
            bad.push(src);
        }
    }
    let lo = days_from_civil(1990, 1, 1);
    let hi = days_from_civil(2040, 1, 1);
    for _ in 0..100 {
        let start = rng.gen_range(lo..hi);
        let end = start + rng.gen_range(0..=3 * 365);
        let src = format!(
            "A day is a temporal concept expressed in days ranging from {} to {}.",
            civil_from_days(start),
            civil_from_days(end)
        );
        let got = labels(&compile_source(&src).unwrap_or_default(), "day");
        let oracle: Vec<String> = (start..=end).map(civil_from_days).collect();
        if got.len() as i64 != end - start + 1 || got != oracle {
            bad.push(src);
        }
    }
    verdict(bad.is_empty(), format!("200 minute ranges, 100 date ranges, {} mismatches {:?}", bad.len(), bad.first()))
}

fn order_independence(cases: &[Case]) -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let (mut props, mut runs, mut bad) = (0, 0, Vec::new());
    for c in cases {
        let doc = common::parse(&c.input);
        let reference = compile_source(&common::render(&doc)).unwrap();
        for i in 0..doc.propositions.len() {
            let kind = &doc.propositions[i].kind;
            if !matches!(kind, PropositionKind::Fact(_) | PropositionKind::Prohibited(_) | PropositionKind::Required(_) | PropositionKind::Weak(_)) {
                continue;
            }
            props += 1;
            for _ in 0..20 {
                runs += 1;
                let out = compile_source(&common::render(&common::shuffle_withs(&doc, i, &mut rng)));
                if out.as_ref() != Ok(&reference) {
                    bad.push(format!("{}#{}", c.name, i + 1));
                }
            }
        }
    }
    bad.dedup();
    verdict(bad.is_empty(), format!("{props} propositions, {runs} permutations, differing {bad:?}"))
}

fn safety(cases: &[Case]) -> Outcome {
    let mut rules = 0;
    let mut bad = Vec::new();
    let mut sources: Vec<String> = cases.iter().map(|c| c.input.clone()).collect();
    let mut rng = StdRng::seed_from_u64(7);
    sources.extend((0..500).map(|_| common::random_document(&mut rng)));
    for src in &sources {
        match compile_program(src) {
            Ok(p) => {
                for s in &p.statements {
                    rules += 1;
                    if !is_safe(s) {
                        bad.push(s.to_string());
                    }
                }
            }
            Err(e) => bad.push(format!("rejected: {:?}", e.first())),
        }
    }
    let involution = CompareOp::ALL.iter().all(|op| op.negate().negate() == *op && op.negate() != *op);
    verdict(
        bad.is_empty() && involution,
        format!("{} documents, {rules} statements, {} unsafe, involution {involution}", sources.len(), bad.len()),
    )
}

fn solver(cases: &[Case]) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let solver = match cnlc::solver::locate(None).filter(|p| p.is_file()).or_else(|| common::python_solver(dir.path())) {
        Some(p) => p,
        None => return Outcome::Skip("no clingo binary and no python clingo module".into()),
    };
    let mut details = Vec::new();
    let mut ok = true;
    for name in ENCODINGS {
        let c = case(cases, name);
        let (_, registry) = compile_with_registry(&c.input).unwrap();
        let constants: Vec<(String, i64)> = registry.open_constants().into_iter().map(|k| (k, 1)).collect();
        let program = compile_source(&c.input).unwrap();
        match smoke_check(&program, &solver, &constants) {
            Ok(()) => details.push(format!("{name} accepted")),
            Err(e) => {
                ok = false;
                details.push(format!("{name}: {e}"));
            }
        }
    }
    verdict(ok, format!("{} ({})", details.join(", "), solver.display()))
}

#[test]
fn acceptance() {
    let cases = common::load_cases();
    let criteria: Vec<(&str, Outcome)> = vec![
        ("1 snippet goldens", snippets(&cases)),
        ("2 problem goldens", problems(&cases)),
        ("3 generated encoding goldens", encodings(&cases)),
        ("4 temporal counting", temporal()),
        ("5 with-clause order", order_independence(&cases)),
        ("6 safety and negation", safety(&cases)),
        ("7 solver smoke", solver(&cases)),
    ];
    let mut failed = Vec::new();
    for (name, outcome) in &criteria {
        match outcome {
            Outcome::Pass(d) => println!("PASS criterion {name}: {d}"),
            Outcome::Skip(d) => println!("SKIP criterion {name}: {d}"),
            Outcome::Fail(d) => {
                println!("FAIL criterion {name}: {d}");
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
