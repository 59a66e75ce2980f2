//! Events as regions of the static model, and the chronology that orders
//! them.
//!
//! An event is identified by the region of the model in which it happens:
//! a set of stages plus the flow and trigger edges running between them.
//! Events may contain other events, and may recur, either by appearing as
//! several chronology nodes over one region or through a multiplicity
//! count. The chronology is a DAG over event identifiers; events with no
//! path between them may happen in either order.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::model::{ElementId, ElementKind, Model};
use crate::normalize::Normalization;
use crate::span::SourceSpan;
use crate::validate::{Diagnostic, RuleCode};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BehaviorError {
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("event containment cycle: {}", .0.join(" ⊃ "))]
    ContainmentCycle(Vec<String>),
    #[error("order is not a permutation of the chronology nodes")]
    NotAPermutation,
    #[error("chronology has a cycle through {}", .0.join(", "))]
    CyclicChronology(Vec<String>),
}

/// Logical time: the position of an event instance in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct TimeStamp(pub u64);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventDef {
    pub id: String,
    pub label: Option<String>,
    /// Stages and edges of the static model.
    pub region: BTreeSet<ElementId>,
    pub multiplicity: u32,
    pub subevents: Vec<String>,
    pub span: Option<SourceSpan>,
}

impl EventDef {
    pub fn new(id: impl Into<String>) -> Self {
        EventDef {
            id: id.into(),
            label: None,
            region: BTreeSet::new(),
            multiplicity: 1,
            subevents: Vec::new(),
            span: None,
        }
    }

    /// Event whose region is `stages` plus every edge running between them.
    pub fn from_stages(model: &Model, id: impl Into<String>, stages: impl IntoIterator<Item = ElementId>) -> Self {
        let mut e = EventDef::new(id);
        e.region = induced_region(model, stages);
        e
    }

    pub fn with_multiplicity(mut self, n: u32) -> Self {
        self.multiplicity = n;
        self
    }

    pub fn region_stages<'a>(&'a self, model: &'a Model) -> impl Iterator<Item = ElementId> + 'a {
        self.region.iter().copied().filter(|&e| model.stage(e).is_some())
    }
}

/// `stages` together with all flow and trigger edges whose endpoints both
/// lie in `stages`.
pub fn induced_region(model: &Model, stages: impl IntoIterator<Item = ElementId>) -> BTreeSet<ElementId> {
    let mut region: BTreeSet<ElementId> = stages.into_iter().collect();
    let edges: Vec<ElementId> = model
        .flows()
        .iter()
        .map(|f| (f.id, f.from, f.to))
        .chain(model.triggers().iter().map(|t| (t.id, t.from, t.to)))
        .filter(|(_, a, b)| region.contains(a) && region.contains(b))
        .map(|(id, _, _)| id)
        .collect();
    region.extend(edges);
    region
}

/// Number of occurrences the simulator executes per chronology node.
pub fn instances(event: &EventDef) -> u32 {
    event.multiplicity
}

/// Union of `root`'s region with the regions of every event it
/// transitively contains.
pub fn flatten(events: &[EventDef], root: &str) -> Result<BTreeSet<ElementId>, BehaviorError> {
    let by_id: BTreeMap<&str, &EventDef> = events.iter().map(|e| (e.id.as_str(), e)).collect();
    fn walk<'a>(
        by_id: &BTreeMap<&str, &'a EventDef>,
        id: &'a str,
        path: &mut Vec<&'a str>,
        done: &mut BTreeSet<&'a str>,
        out: &mut BTreeSet<ElementId>,
    ) -> Result<(), BehaviorError> {
        if let Some(pos) = path.iter().position(|&p| p == id) {
            let mut cycle: Vec<String> = path[pos..].iter().map(|s| s.to_string()).collect();
            cycle.push(id.to_string());
            return Err(BehaviorError::ContainmentCycle(cycle));
        }
        if done.contains(id) {
            return Ok(());
        }
        let event = by_id.get(id).ok_or_else(|| BehaviorError::UnknownEvent(id.to_string()))?;
        out.extend(event.region.iter().copied());
        path.push(id);
        for sub in &event.subevents {
            // undeclared subevents are reported by validation, not here
            if by_id.contains_key(sub.as_str()) {
                walk(by_id, sub, path, done, out)?;
            }
        }
        path.pop();
        done.insert(id);
        Ok(())
    }
    let root = by_id
        .get_key_value(root)
        .map(|(k, _)| *k)
        .ok_or_else(|| BehaviorError::UnknownEvent(root.to_string()))?;
    let mut out = BTreeSet::new();
    walk(&by_id, root, &mut Vec::new(), &mut BTreeSet::new(), &mut out)?;
    Ok(out)
}

/// Region diagnostics for one event: dangling members are errors, a
/// region that is not weakly connected through its own edges warns.
pub fn check_region(model: &Model, event: &EventDef) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for &member in &event.region {
        if !model.contains(member) || model.element_kind(member) == Some(ElementKind::Thimac) {
            out.push(
                Diagnostic::error(
                    RuleCode::RegionDangling,
                    format!("event {} references unknown element {member}", event.id),
                )
                .with_span(event.span.clone()),
            );
        }
    }
    let stages: BTreeSet<ElementId> = event.region_stages(model).collect();
    if stages.len() > 1 {
        let mut adj: BTreeMap<ElementId, Vec<ElementId>> = BTreeMap::new();
        let edges = model
            .flows()
            .iter()
            .map(|f| (f.id, f.from, f.to))
            .chain(model.triggers().iter().map(|t| (t.id, t.from, t.to)));
        for (id, a, b) in edges {
            if event.region.contains(&id) && stages.contains(&a) && stages.contains(&b) {
                adj.entry(a).or_default().push(b);
                adj.entry(b).or_default().push(a);
            }
        }
        let start = *stages.iter().next().unwrap();
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(s) = stack.pop() {
            for &n in adj.get(&s).into_iter().flatten() {
                if seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        if seen.len() != stages.len() {
            out.push(
                Diagnostic::warning(
                    RuleCode::RegionDisconnected,
                    format!(
                        "region of event {} is not connected: {} of {} stages reachable from {}",
                        event.id,
                        seen.len(),
                        stages.len(),
                        model.qualified_name(start)
                    ),
                )
                .with_span(event.span.clone()),
            );
        }
    }
    out
}

/// Carries event regions across normalization: a region that held an
/// elided edge now holds the stages of its expansion and the edges
/// between its stages.
pub fn remap_regions(events: &[EventDef], normalization: &Normalization) -> Vec<EventDef> {
    let model = &normalization.model;
    events
        .iter()
        .map(|event| {
            let hit: Vec<_> = normalization
                .expansions
                .iter()
                .filter(|x| event.region.contains(&x.original))
                .collect();
            if hit.is_empty() {
                return event.clone();
            }
            let mut region: BTreeSet<ElementId> = event.region.iter().copied().filter(|&e| model.contains(e)).collect();
            for x in hit {
                region.extend(x.chain.iter().copied());
            }
            let stages: Vec<_> = region.iter().copied().filter(|&e| model.stage(e).is_some()).collect();
            region.extend(induced_region(model, stages));
            EventDef {
                region,
                ..event.clone()
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CoverageReport {
    /// Qualified names of stages and edges in no event region.
    pub uncovered: Vec<String>,
}

pub fn coverage_report(model: &Model, events: &[EventDef]) -> CoverageReport {
    let covered: BTreeSet<ElementId> = events.iter().flat_map(|e| e.region.iter().copied()).collect();
    let mut ids: Vec<ElementId> = model
        .stages()
        .map(|s| s.id)
        .chain(model.flows().iter().map(|f| f.id))
        .chain(model.triggers().iter().map(|t| t.id))
        .filter(|id| !covered.contains(id))
        .collect();
    ids.sort();
    CoverageReport {
        uncovered: ids.into_iter().map(|id| model.qualified_name(id)).collect(),
    }
}

/// Directed graph over event identifiers. Node order is declaration
/// order and breaks ties when scheduling.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Chronology {
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub span: Option<SourceSpan>,
}

impl Chronology {
    pub fn add_node(&mut self, id: &str) {
        if !self.nodes.iter().any(|n| n == id) {
            self.nodes.push(id.to_string());
        }
    }

    pub fn add_edge(&mut self, from: &str, to: &str) {
        self.add_node(from);
        self.add_node(to);
        if !self.edges.iter().any(|(a, b)| a == from && b == to) {
            self.edges.push((from.to_string(), to.to_string()));
        }
    }

    fn index(&self) -> (BTreeMap<&str, usize>, Vec<Vec<usize>>, Vec<usize>) {
        let pos: BTreeMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut succ = vec![Vec::new(); self.nodes.len()];
        let mut indegree = vec![0; self.nodes.len()];
        for (a, b) in &self.edges {
            if let (Some(&i), Some(&j)) = (pos.get(a.as_str()), pos.get(b.as_str())) {
                succ[i].push(j);
                indegree[j] += 1;
            }
        }
        (pos, succ, indegree)
    }

    /// Kahn's algorithm, always taking the earliest-declared ready node.
    /// Returns the nodes left over when a cycle blocks progress.
    fn kahn(&self) -> (Vec<usize>, Vec<usize>) {
        let (_, succ, mut indegree) = self.index();
        let mut ready: BTreeSet<usize> = (0..self.nodes.len()).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &j in &succ[i] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.insert(j);
                }
            }
        }
        let left = (0..self.nodes.len()).filter(|&i| indegree[i] > 0).collect();
        (order, left)
    }

    /// Nodes that lie on or behind a directed cycle, or `None` when acyclic.
    pub fn find_cycle(&self) -> Option<Vec<String>> {
        let (_, left) = self.kahn();
        (!left.is_empty()).then(|| left.into_iter().map(|i| self.nodes[i].clone()).collect())
    }

    pub fn is_acyclic(&self) -> bool {
        self.find_cycle().is_none()
    }

    /// The deterministic linear extension used for execution.
    pub fn schedule(&self) -> Result<Vec<String>, BehaviorError> {
        let (order, left) = self.kahn();
        if !left.is_empty() {
            return Err(BehaviorError::CyclicChronology(
                left.into_iter().map(|i| self.nodes[i].clone()).collect(),
            ));
        }
        Ok(order.into_iter().map(|i| self.nodes[i].clone()).collect())
    }
}

/// True iff `order` is a linear extension of the chronology: a
/// permutation of its nodes that puts every edge's source first.
pub fn topological_orders_contains<S: AsRef<str>>(chronology: &Chronology, order: &[S]) -> Result<bool, BehaviorError> {
    if order.len() != chronology.nodes.len() {
        return Err(BehaviorError::NotAPermutation);
    }
    let mut position: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, id) in order.iter().enumerate() {
        if position.insert(id.as_ref(), i).is_some() {
            return Err(BehaviorError::NotAPermutation);
        }
    }
    if chronology.nodes.iter().any(|n| !position.contains_key(n.as_str())) {
        return Err(BehaviorError::NotAPermutation);
    }
    Ok(chronology
        .edges
        .iter()
        .all(|(a, b)| position[a.as_str()] < position[b.as_str()]))
}

/// Breadth-first distance, in chronology edges, from any source node.
/// Handy for layering chronology drawings.
pub fn chronology_depths(chronology: &Chronology) -> BTreeMap<String, usize> {
    let (_, succ, indegree) = chronology.index();
    let mut depth = vec![0usize; chronology.nodes.len()];
    let mut queue: VecDeque<usize> = (0..chronology.nodes.len()).filter(|&i| indegree[i] == 0).collect();
    let mut remaining = indegree.clone();
    while let Some(i) = queue.pop_front() {
        for &j in &succ[i] {
            depth[j] = depth[j].max(depth[i] + 1);
            remaining[j] -= 1;
            if remaining[j] == 0 {
                queue.push_back(j);
            }
        }
    }
    chronology.nodes.iter().cloned().zip(depth).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StageKind;

    fn chain(ids: &[&str]) -> Chronology {
        let mut c = Chronology::default();
        for w in ids.windows(2) {
            c.add_edge(w[0], w[1]);
        }
        c
    }

    #[test]
    fn linear_extension_of_chain() {
        let c = chain(&["E1", "E2", "E3"]);
        assert_eq!(topological_orders_contains(&c, &["E1", "E2", "E3"]), Ok(true));
        assert_eq!(topological_orders_contains(&c, &["E2", "E1", "E3"]), Ok(false));
        assert_eq!(
            topological_orders_contains(&c, &["E1", "E2"]),
            Err(BehaviorError::NotAPermutation)
        );
        assert_eq!(
            topological_orders_contains(&c, &["E1", "E1", "E3"]),
            Err(BehaviorError::NotAPermutation)
        );
    }

    #[test]
    fn parallel_events_admit_both_orders() {
        let mut c = Chronology::default();
        c.add_edge("E2", "E3");
        c.add_edge("E2", "E4");
        c.add_edge("E3", "E5");
        c.add_edge("E4", "E5");
        assert_eq!(topological_orders_contains(&c, &["E2", "E3", "E4", "E5"]), Ok(true));
        assert_eq!(topological_orders_contains(&c, &["E2", "E4", "E3", "E5"]), Ok(true));
        assert_eq!(c.schedule().unwrap(), ["E2", "E3", "E4", "E5"]);
    }

    #[test]
    fn schedule_breaks_ties_by_declaration() {
        let mut c = Chronology::default();
        c.add_node("B");
        c.add_node("A");
        c.add_edge("A", "C");
        assert_eq!(c.schedule().unwrap(), ["B", "A", "C"]);
    }

    #[test]
    fn cycle_detection() {
        let mut c = chain(&["A", "B", "C"]);
        assert!(c.is_acyclic());
        c.add_edge("C", "A");
        assert!(c.find_cycle().is_some());
        assert!(matches!(c.schedule(), Err(BehaviorError::CyclicChronology(_))));
    }

    fn small_model() -> Model {
        let mut m = Model::new();
        let a = m.add_thimac(None, "A").unwrap();
        for k in [StageKind::Create, StageKind::Process, StageKind::Release] {
            m.add_stage(a, k).unwrap();
        }
        m.add_flow_path("A.create", "A.process").unwrap();
        m.add_flow_path("A.process", "A.release").unwrap();
        m
    }

    #[test]
    fn flatten_events_of_events() {
        let m = small_model();
        let passing = EventDef::from_stages(&m, "Passing", [m.resolve_stage("A.process").unwrap()]);
        let mut year = EventDef::from_stages(&m, "LastYear", [m.resolve_stage("A.create").unwrap()]);
        year.subevents.push("Passing".into());
        let events = vec![passing.clone(), year];
        assert_eq!(flatten(&events, "Passing").unwrap(), passing.region);
        let all = flatten(&events, "LastYear").unwrap();
        assert!(all.is_superset(&passing.region));
        assert_eq!(flatten(&events, "Nope"), Err(BehaviorError::UnknownEvent("Nope".into())));
    }

    #[test]
    fn containment_cycle() {
        let mut a = EventDef::new("A");
        a.subevents.push("B".into());
        let mut b = EventDef::new("B");
        b.subevents.push("A".into());
        assert!(matches!(flatten(&[a, b], "A"), Err(BehaviorError::ContainmentCycle(_))));
    }

    #[test]
    fn instances_default_and_repeat() {
        assert_eq!(instances(&EventDef::new("E")), 1);
        assert_eq!(instances(&EventDef::new("Ships").with_multiplicity(4000)), 4000);
    }

    #[test]
    fn region_checks() {
        let m = small_model();
        let one = EventDef::from_stages(&m, "E", [m.resolve_stage("A.create").unwrap()]);
        assert!(check_region(&m, &one).is_empty());

        let mut dangling = one.clone();
        dangling.region.insert(ElementId(999));
        let d = check_region(&m, &dangling);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, RuleCode::RegionDangling);

        let split = EventDef::from_stages(
            &m,
            "Split",
            [m.resolve_stage("A.create").unwrap(), m.resolve_stage("A.release").unwrap()],
        );
        let d = check_region(&m, &split);
        assert_eq!(d[0].code, RuleCode::RegionDisconnected);
    }

    #[test]
    fn induced_region_collects_edges() {
        let m = small_model();
        let e = EventDef::from_stages(&m, "E", m.stages().map(|s| s.id).collect::<Vec<_>>());
        assert_eq!(e.region.len(), 5);
        assert!(coverage_report(&m, &[e]).uncovered.is_empty());
        let partial = EventDef::from_stages(&m, "P", [m.resolve_stage("A.create").unwrap()]);
        assert_eq!(
            coverage_report(&m, &[partial]).uncovered,
            ["A.process", "A.release", "A.create->A.process", "A.process->A.release"]
        );
    }
}
