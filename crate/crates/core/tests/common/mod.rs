#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmkit::behavior::{Chronology, EventDef};
use tmkit::{ElementId, Model, StageKind};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random forest of thimacs with up to `max_stages` stages and random
/// flows and triggers between them. Flows ignore legality, so the result
/// is usually a simplified (or broken) model.
pub fn random_model(rng: &mut impl Rng, max_stages: usize) -> Model {
    let mut m = Model::new();
    let mut thimacs: Vec<ElementId> = Vec::new();
    let n_thimacs = rng.gen_range(1..=4);
    for i in 0..n_thimacs {
        let parent = if thimacs.is_empty() || rng.gen_bool(0.5) {
            None
        } else {
            Some(*thimacs.choose(rng).unwrap())
        };
        thimacs.push(m.add_thimac(parent, &format!("T{i}")).unwrap());
    }
    let target = rng.gen_range(1..=max_stages);
    for _ in 0..target * 3 {
        if m.stages().count() >= target {
            break;
        }
        let t = *thimacs.choose(rng).unwrap();
        let kind = *StageKind::ALL.choose(rng).unwrap();
        let _ = m.add_stage(t, kind);
    }
    let stages: Vec<ElementId> = m.stages().map(|s| s.id).collect();
    if stages.len() >= 2 {
        for _ in 0..rng.gen_range(0..=stages.len() + 2) {
            let a = *stages.choose(rng).unwrap();
            let b = *stages.choose(rng).unwrap();
            if a != b {
                m.add_flow(a, b).unwrap();
            }
        }
    }
    for _ in 0..rng.gen_range(0..=2) {
        let a = *stages.choose(rng).unwrap();
        let b = *stages.choose(rng).unwrap();
        m.add_trigger(a, b).unwrap();
        if rng.gen_bool(0.5) {
            m.set_annotation(a, Some(rng.gen_range(0..100)));
        }
    }
    m
}

/// A random model whose flows form chains starting at create stages, so
/// that it normalizes and validates. Chains may hop between machines and
/// may fire triggers into other chains.
pub fn random_pipeline(rng: &mut impl Rng) -> Model {
    let mut m = Model::new();
    let mut thimacs: Vec<ElementId> = Vec::new();
    for i in 0..rng.gen_range(2..=5) {
        let parent = if thimacs.is_empty() || rng.gen_bool(0.7) {
            None
        } else {
            Some(*thimacs.choose(rng).unwrap())
        };
        thimacs.push(m.add_thimac(parent, &format!("M{i}")).unwrap());
    }
    let mut sources = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let start = *thimacs.choose(rng).unwrap();
        let mut at = stage_of(&mut m, start, StageKind::Create);
        sources.push(at);
        let mut seen = vec![at];
        for _ in 0..rng.gen_range(1..=4) {
            let t = *thimacs.choose(rng).unwrap();
            let kind = *[StageKind::Process, StageKind::Release, StageKind::Receive].choose(rng).unwrap();
            let next = stage_of(&mut m, t, kind);
            if seen.contains(&next) || m.find_flow(at, next).is_some() {
                break;
            }
            m.add_flow(at, next).unwrap();
            seen.push(next);
            at = next;
        }
    }
    if sources.len() > 1 && rng.gen_bool(0.5) {
        let from = m.flows().choose(rng).map(|f| f.to);
        let target = *sources.choose(rng).unwrap();
        if let Some(from) = from.filter(|&f| f != target) {
            m.add_trigger(from, target).unwrap();
        }
    }
    m
}

fn stage_of(m: &mut Model, thimac: ElementId, kind: StageKind) -> ElementId {
    match m.thimac(thimac).unwrap().stage(kind) {
        Some(s) => s,
        None => m.add_stage(thimac, kind).unwrap(),
    }
}

/// Random events over a model's stages and a random acyclic chronology
/// over them.
pub fn random_behavior(rng: &mut impl Rng, model: &Model) -> (Vec<EventDef>, Option<Chronology>) {
    let stages: Vec<ElementId> = model.stages().map(|s| s.id).collect();
    let mut events = Vec::new();
    if stages.is_empty() {
        return (events, None);
    }
    for i in 0..rng.gen_range(0..=3) {
        let size = rng.gen_range(1..=stages.len());
        let picked: Vec<ElementId> = stages.choose_multiple(rng, size).copied().collect();
        let mut e = EventDef::from_stages(model, format!("E{i}"), picked);
        if rng.gen_bool(0.3) {
            e.multiplicity = rng.gen_range(1..5);
        }
        if rng.gen_bool(0.3) {
            e.label = Some(format!("event \"{i}\" label"));
        }
        if i > 0 && rng.gen_bool(0.3) {
            e.subevents.push(format!("E{}", i - 1));
        }
        events.push(e);
    }
    if events.is_empty() || rng.gen_bool(0.3) {
        return (events, None);
    }
    let mut c = Chronology::default();
    for e in &events {
        c.add_node(&e.id);
    }
    for i in 0..events.len() {
        for j in i + 1..events.len() {
            if rng.gen_bool(0.4) {
                c.add_edge(&events[i].id, &events[j].id);
            }
        }
    }
    (events, Some(c))
}

/// Random digraph on `n` named nodes, cycles allowed.
pub fn random_digraph(rng: &mut impl Rng, n: usize) -> Chronology {
    let mut c = Chronology::default();
    for i in 0..n {
        c.add_node(&format!("N{i}"));
    }
    let density = rng.gen_range(0.0..0.35);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(density) {
                c.add_edge(&format!("N{i}"), &format!("N{j}"));
            }
        }
    }
    c
}

/// The permitted stage wirings, written out independently of the library.
const LEGAL: [(&str, &str, bool); 8] = [
    ("create", "process", true),
    ("create", "release", true),
    ("receive", "process", true),
    ("receive", "release", true),
    ("process", "release", true),
    ("release", "transfer", true),
    ("transfer", "receive", true),
    ("transfer", "transfer", false),
];

/// Flow ids violating the wiring table, found by inspecting each edge on
/// its own.
pub fn brute_force_illegal(model: &Model) -> BTreeSet<ElementId> {
    model
        .flows()
        .iter()
        .filter(|f| {
            let a = model.stage(f.from).unwrap();
            let b = model.stage(f.to).unwrap();
            let same = a.owner == b.owner;
            !LEGAL.contains(&(a.kind.as_str(), b.kind.as_str(), same))
        })
        .map(|f| f.id)
        .collect()
}

/// Three-colour depth-first search for a directed cycle.
pub fn dfs_has_cycle(c: &Chronology) -> bool {
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in &c.edges {
        adj.entry(a).or_default().push(b);
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Colour {
        White,
        Grey,
        Black,
    }
    fn visit<'a>(n: &'a str, adj: &BTreeMap<&'a str, Vec<&'a str>>, colour: &mut BTreeMap<&'a str, Colour>) -> bool {
        colour.insert(n, Colour::Grey);
        for &m in adj.get(n).into_iter().flatten() {
            match colour.get(m).copied().unwrap_or(Colour::White) {
                Colour::Grey => return true,
                Colour::White if visit(m, adj, colour) => return true,
                _ => {}
            }
        }
        colour.insert(n, Colour::Black);
        false
    }
    let mut colour = BTreeMap::new();
    c.nodes
        .iter()
        .any(|n| !colour.contains_key(n.as_str()) && visit(n, &adj, &mut colour))
}

/// Every linear extension of an acyclic chronology, by backtracking over
/// the currently unconstrained nodes.
pub fn all_linear_extensions(c: &Chronology) -> BTreeSet<Vec<String>> {
    fn go(c: &Chronology, placed: &mut Vec<String>, out: &mut BTreeSet<Vec<String>>) {
        if placed.len() == c.nodes.len() {
            out.insert(placed.clone());
            return;
        }
        for n in &c.nodes {
            if placed.contains(n) {
                continue;
            }
            let blocked = c.edges.iter().any(|(a, b)| b == n && !placed.contains(a));
            if !blocked {
                placed.push(n.clone());
                go(c, placed, out);
                placed.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    go(c, &mut Vec::new(), &mut out);
    out
}

/// Counts of node and edge statements and clusters in DOT text produced
/// by this crate (one statement per line).
#[derive(Debug, Default, PartialEq, Eq)]
pub struct DotCounts {
    pub nodes: usize,
    pub edges: usize,
    pub clusters: usize,
    pub dashed: usize,
}

pub fn read_dot(dot: &str) -> DotCounts {
    let mut counts = DotCounts::default();
    let mut depth = 0i32;
    for line in dot.lines().map(str::trim) {
        if line.starts_with("subgraph \"cluster_") {
            if !line.starts_with("subgraph \"cluster_legend\"") {
                counts.clusters += 1;
            }
        } else if line.starts_with('"') && line.contains(" -> ") {
            counts.edges += 1;
            if line.contains("style=dashed") {
                counts.dashed += 1;
            }
        } else if line.starts_with('"') && line.contains('[') && !line.starts_with("\"legend\"") {
            counts.nodes += 1;
        }
        depth += line.matches('{').count() as i32 - line.matches('}').count() as i32;
        assert!(depth >= 0, "unbalanced braces");
    }
    assert_eq!(depth, 0, "unbalanced braces");
    counts
}
