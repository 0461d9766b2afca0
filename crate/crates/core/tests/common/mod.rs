#![allow(dead_code)]

use std::path::PathBuf;

use cnlc::ast::Document;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn render(doc: &Document) -> String {
    doc.propositions.iter().map(|p| format!("{p}\n")).collect()
}

/// Shuffles the with-clauses of every noun phrase of one proposition.
pub fn shuffle_withs<R: Rng>(doc: &Document, index: usize, rng: &mut R) -> Document {
    let mut d = doc.clone();
    d.propositions[index].kind.visit_mentions_mut(&mut |m| m.attributes.shuffle(rng));
    d
}

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs[rng.gen_range(0..xs.len())]
}

fn var<R: Rng>(rng: &mut R, base: &str) -> String {
    format!("{base}{}", rng.gen_range(1..4))
}

/// A random document drawn from the sentence forms of the grammar, over
/// a fixed vocabulary of concepts.
pub fn random_document<R: Rng>(rng: &mut R) -> String {
    let nodes = rng.gen_range(2..8);
    let workers = rng.gen_range(1..5);
    let mut lines = vec![
        format!("A node goes from 1 to {nodes}."),
        "A color is one of red, green, blue.".to_string(),
        "A worker is identified by an id, and has a level.".to_string(),
        "A task is identified by an id, and has a cost, and a duration.".to_string(),
        "A slot is a temporal concept expressed in minutes ranging from 08:00 AM to 10:00 AM with a length of 30 minutes.".to_string(),
        "A senior is identified by an id.".to_string(),
        "A job is identified by a worker, and by a slot.".to_string(),
        "limit is a constant.".to_string(),
        format!("bound is a constant equal to {}.", rng.gen_range(1..5)),
    ];
    for i in 1..=workers {
        let mut withs = [format!("with id equal to {i}"), format!("with level equal to {}", rng.gen_range(0..4))];
        withs.shuffle(rng);
        lines.push(format!("There is a worker {}.", withs.join(", ")));
    }
    let forms = rng.gen_range(3..9);
    for _ in 0..forms {
        let (x, y) = (var(rng, "X"), var(rng, "Y"));
        let (x, y) = if x == y { (x, format!("{y}b")) } else { (x, y) };
        let k = rng.gen_range(1..4);
        let prio = pick(rng, &["low", "medium", "high"]);
        let line = match rng.gen_range(0..16) {
            0 => format!("Node {} is connected to node {}.", rng.gen_range(1..=nodes), rng.gen_range(1..=nodes)),
            1 => format!("Every node can be assigned to exactly {k} color."),
            2 => "Every node can be chosen.".to_string(),
            3 => format!("Every worker can perform at most {k} task."),
            4 => "It is required that every node is chosen.".to_string(),
            5 => format!("It is prohibited that node {x} is chosen and also node {y} is chosen, where {x} is different from {y}."),
            6 => format!("It is required that the number of nodes that are chosen is at least {k}."),
            7 => format!("It is preferred as much as possible, with {prio} priority, that the number of nodes that are chosen is maximized."),
            8 => format!("It is prohibited that worker {x} performs task {y}, whenever there is a worker {x} with level greater than {k}."),
            9 => format!("Whenever there is a worker with id {x}, with level greater than {k} then we must have a senior with id {x}."),
            10 => format!("It is required that the level {y} of the worker {x} is less than bound, whenever there is a worker {x}."),
            11 => format!("It is preferred as little as possible, with {prio} priority, that V is equal to 1, whenever there is a worker with id {x}, and with level V."),
            12 => format!("It is prohibited that node {x} is chosen, where {x} is one of 1, {}.", rng.gen_range(2..=nodes)),
            13 => format!("Node {y} is reachable when node {x} is reachable and also node {x} is connected to node {y}."),
            14 => format!("Whenever there is a worker {x} then {x} can have a job to exactly 1 slot."),
            _ => format!("It is required that the number of workers that are assigned to slot {x} is at most limit, whenever there is a slot {x}."),
        };
        lines.push(line);
    }
    lines.join("\n") + "\n"
}

pub fn parse(source: &str) -> Document {
    let tokens = cnlc::token::tokenize(source).unwrap();
    cnlc::parser::parse_document(&tokens).unwrap()
}

pub fn load_cases() -> Vec<cnlc::corpus::Case> {
    cnlc::corpus::load_corpus(&corpus_dir()).unwrap()
}

/// A solver wrapper around the Python grounder, or `None` when the
/// `clingo` module is not installed.
pub fn python_solver(dir: &std::path::Path) -> Option<PathBuf> {
    let ok = std::process::Command::new("python3").args(["-c", "import clingo"]).output().ok()?.status.success();
    if !ok {
        return None;
    }
    use std::os::unix::fs::PermissionsExt;
    let path = dir.join("clingo");
    std::fs::write(&path, "#!/bin/sh\nexec python3 -m clingo \"$@\"\n").ok()?;
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).ok()?;
    Some(path)
}
