//! Semantic validation of models, event definitions and chronologies.
//!
//! Every rule reports through a [`Diagnostic`] carrying a stable
//! [`RuleCode`]; nothing here short-circuits, so one run shows every
//! problem. Flow legality is meant to be checked on normalized models:
//! a simplified source form is normalized first and validated afterwards.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::behavior::{self, Chronology, EventDef};
use crate::model::{ElementId, Model, StageKind};
use crate::span::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// The closed set of diagnostic codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuleCode {
    // concrete syntax
    LexError,
    SyntaxError,
    UnresolvedPath,
    DuplicateDefinition,
    DuplicateEdge,
    InvalidRepeat,
    JsonMalformed,
    UnknownStageKind,
    DanglingReference,
    MemoryUnsupported,
    // static model
    FlowIllegal,
    OriginMissing,
    TriggerSelf,
    StageUnreachable,
    // behavior
    RegionDangling,
    RegionDisconnected,
    RegionUncovered,
    EventEmpty,
    EventUnknownSubevent,
    EventContainmentCycle,
    ChronoCycle,
    ChronoUnknownEvent,
    ChronoUnjustified,
}

impl RuleCode {
    pub fn as_str(self) -> &'static str {
        use RuleCode::*;
        match self {
            LexError => "LEX_ERROR",
            SyntaxError => "SYNTAX_ERROR",
            UnresolvedPath => "UNRESOLVED_PATH",
            DuplicateDefinition => "DUPLICATE_DEFINITION",
            DuplicateEdge => "DUPLICATE_EDGE",
            InvalidRepeat => "INVALID_REPEAT",
            JsonMalformed => "JSON_MALFORMED",
            UnknownStageKind => "UNKNOWN_STAGE_KIND",
            DanglingReference => "DANGLING_REFERENCE",
            MemoryUnsupported => "MEMORY_UNSUPPORTED",
            FlowIllegal => "FLOW_ILLEGAL",
            OriginMissing => "ORIGIN_MISSING",
            TriggerSelf => "TRIGGER_SELF",
            StageUnreachable => "STAGE_UNREACHABLE",
            RegionDangling => "REGION_DANGLING",
            RegionDisconnected => "REGION_DISCONNECTED",
            RegionUncovered => "REGION_UNCOVERED",
            EventEmpty => "EVENT_EMPTY",
            EventUnknownSubevent => "EVENT_UNKNOWN_SUBEVENT",
            EventContainmentCycle => "EVENT_CONTAINMENT_CYCLE",
            ChronoCycle => "CHRONO_CYCLE",
            ChronoUnknownEvent => "CHRONO_UNKNOWN_EVENT",
            ChronoUnjustified => "CHRONO_UNJUSTIFIED",
        }
    }
}

impl fmt::Display for RuleCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: RuleCode,
    pub message: String,
    pub span: Option<SourceSpan>,
    #[serde(skip)]
    pub element: Option<ElementId>,
}

impl Diagnostic {
    pub fn error(code: RuleCode, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            span: None,
            element: None,
        }
    }

    pub fn warning(code: RuleCode, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(code, message)
        }
    }

    pub fn with_span(mut self, span: Option<SourceSpan>) -> Self {
        self.span = span;
        self
    }

    /// Attaches an element and, unless already set, its span.
    pub fn at(mut self, model: &Model, element: ElementId) -> Self {
        self.element = Some(element);
        if self.span.is_none() {
            self.span = model.span(element).cloned();
        }
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    fn sort_key(&self) -> impl Ord + '_ {
        (
            self.span.as_ref().map(|s| (s.file.clone(), s.start_line, s.start_col, s.end_line, s.end_col)),
            self.code.as_str(),
            &self.message,
        )
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(span) = &self.span {
            write!(f, "{span}: ")?;
        }
        write!(f, "{}[{}] {}", self.severity, self.code, self.message)
    }
}

/// Orders diagnostics by file, span, then code.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// The fixed stage-wiring relation. Within one machine things flow
/// create/receive → process → release → transfer → receive, with direct
/// create → release and receive → release shortcuts; across machines only
/// transfer hands a thing to transfer.
pub fn legality(from: StageKind, to: StageKind, same_machine: bool) -> bool {
    use StageKind::*;
    if !same_machine {
        return from == Transfer && to == Transfer;
    }
    matches!(
        (from, to),
        (Create, Process)
            | (Create, Release)
            | (Receive, Process)
            | (Receive, Release)
            | (Process, Release)
            | (Release, Transfer)
            | (Transfer, Receive)
    )
}

/// Opt-in lints beyond the default rule set.
#[derive(Debug, Clone, Copy, Default)]
pub struct ValidateOptions {
    /// Warn on chronology edges whose regions share no stage and are not
    /// linked by any flow/trigger path.
    pub chronology_justification: bool,
    /// Warn once listing model elements that no event region covers.
    pub region_coverage: bool,
}

/// Runs the default rule set.
pub fn validate(model: &Model, events: &[EventDef], chronology: Option<&Chronology>) -> Vec<Diagnostic> {
    validate_with(model, events, chronology, ValidateOptions::default())
}

pub fn validate_with(
    model: &Model,
    events: &[EventDef],
    chronology: Option<&Chronology>,
    options: ValidateOptions,
) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    check_flows(model, &mut out);
    check_origins(model, &mut out);
    check_triggers(model, &mut out);
    check_reachability(model, &mut out);
    check_events(model, events, &mut out);
    if let Some(chrono) = chronology {
        check_chronology(events, chrono, &mut out);
        if options.chronology_justification {
            check_justification(model, events, chrono, &mut out);
        }
    }
    if options.region_coverage && !events.is_empty() {
        let uncovered = behavior::coverage_report(model, events).uncovered;
        if !uncovered.is_empty() {
            out.push(Diagnostic::warning(
                RuleCode::RegionUncovered,
                format!("{} element(s) in no event region: {}", uncovered.len(), uncovered.join(", ")),
            ));
        }
    }
    sort_diagnostics(&mut out);
    out
}

fn check_flows(model: &Model, out: &mut Vec<Diagnostic>) {
    for f in model.flows() {
        let (a, b) = (model.stage(f.from).unwrap(), model.stage(f.to).unwrap());
        let same = a.owner == b.owner;
        if !legality(a.kind, b.kind, same) {
            let scope = if same { "within a machine" } else { "across machines" };
            out.push(
                Diagnostic::error(
                    RuleCode::FlowIllegal,
                    format!(
                        "flow {} is not a legal {} → {} transition {}",
                        model.qualified_name(f.id),
                        a.kind,
                        b.kind,
                        scope
                    ),
                )
                .at(model, f.id),
            );
        }
    }
}

/// Weakly connected components of the flow graph, restricted to stages
/// with at least one flow edge. Components come out ordered by their
/// smallest stage id; members are sorted.
pub(crate) fn flow_components(model: &Model) -> Vec<Vec<ElementId>> {
    let mut parent: BTreeMap<ElementId, ElementId> = BTreeMap::new();
    fn find(parent: &mut BTreeMap<ElementId, ElementId>, x: ElementId) -> ElementId {
        let p = parent[&x];
        if p == x {
            return x;
        }
        let root = find(parent, p);
        parent.insert(x, root);
        root
    }
    for f in model.flows() {
        parent.entry(f.from).or_insert(f.from);
        parent.entry(f.to).or_insert(f.to);
        let (a, b) = (find(&mut parent, f.from), find(&mut parent, f.to));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            parent.insert(hi, lo);
        }
    }
    let mut groups: BTreeMap<ElementId, Vec<ElementId>> = BTreeMap::new();
    let keys: Vec<_> = parent.keys().copied().collect();
    for s in keys {
        let r = find(&mut parent, s);
        groups.entry(r).or_default().push(s);
    }
    groups.into_values().collect()
}

fn check_origins(model: &Model, out: &mut Vec<Diagnostic>) {
    let has_inbound: BTreeSet<ElementId> = model.flows().iter().map(|f| f.to).collect();
    let trigger_targets: BTreeSet<ElementId> = model.triggers().iter().map(|t| t.to).collect();
    for component in flow_components(model) {
        let originated = component.iter().any(|&s| {
            let stage = model.stage(s).unwrap();
            stage.kind == StageKind::Create
                || trigger_targets.contains(&s)
                || (stage.kind == StageKind::Transfer && model.is_root(stage.owner) && !has_inbound.contains(&s))
        });
        if !originated {
            let names: Vec<_> = component.iter().map(|&s| model.qualified_name(s)).collect();
            out.push(
                Diagnostic::error(
                    RuleCode::OriginMissing,
                    format!(
                        "flow through {} has no origin: no create stage, trigger target or inbound system-boundary transfer",
                        names.join(", ")
                    ),
                )
                .at(model, component[0]),
            );
        }
    }
}

fn check_triggers(model: &Model, out: &mut Vec<Diagnostic>) {
    for t in model.triggers() {
        if t.from == t.to {
            out.push(
                Diagnostic::warning(
                    RuleCode::TriggerSelf,
                    format!("stage {} triggers itself", model.qualified_name(t.from)),
                )
                .at(model, t.id),
            );
        }
    }
}

fn check_reachability(model: &Model, out: &mut Vec<Diagnostic>) {
    let touched: BTreeSet<ElementId> = model
        .flows()
        .iter()
        .flat_map(|f| [f.from, f.to])
        .chain(model.triggers().iter().flat_map(|t| [t.from, t.to]))
        .collect();
    for s in model.stages() {
        if !touched.contains(&s.id) {
            out.push(
                Diagnostic::warning(
                    RuleCode::StageUnreachable,
                    format!("stage {} has no incident flow or trigger", model.qualified_name(s.id)),
                )
                .at(model, s.id),
            );
        }
    }
}

fn check_events(model: &Model, events: &[EventDef], out: &mut Vec<Diagnostic>) {
    let declared: BTreeSet<&str> = events.iter().map(|e| e.id.as_str()).collect();
    for event in events {
        out.extend(behavior::check_region(model, event));
        for sub in &event.subevents {
            if !declared.contains(sub.as_str()) {
                out.push(
                    Diagnostic::error(
                        RuleCode::EventUnknownSubevent,
                        format!("event {} contains undeclared event {}", event.id, sub),
                    )
                    .with_span(event.span.clone()),
                );
            }
        }
        match behavior::flatten(events, &event.id) {
            Ok(region) if region.is_empty() => out.push(
                Diagnostic::error(RuleCode::EventEmpty, format!("event {} has an empty region", event.id))
                    .with_span(event.span.clone()),
            ),
            Err(behavior::BehaviorError::ContainmentCycle(path)) => out.push(
                Diagnostic::error(
                    RuleCode::EventContainmentCycle,
                    format!("event {} is part of a containment cycle: {}", event.id, path.join(" ⊃ ")),
                )
                .with_span(event.span.clone()),
            ),
            _ => {}
        }
    }
}

fn check_chronology(events: &[EventDef], chrono: &Chronology, out: &mut Vec<Diagnostic>) {
    let declared: BTreeSet<&str> = events.iter().map(|e| e.id.as_str()).collect();
    for node in &chrono.nodes {
        if !declared.contains(node.as_str()) {
            out.push(
                Diagnostic::error(
                    RuleCode::ChronoUnknownEvent,
                    format!("chronology references undeclared event {node}"),
                )
                .with_span(chrono.span.clone()),
            );
        }
    }
    for (a, b) in &chrono.edges {
        for end in [a, b] {
            if !chrono.nodes.contains(end) {
                out.push(
                    Diagnostic::error(
                        RuleCode::ChronoUnknownEvent,
                        format!("chronology edge {a} -> {b} references unknown node {end}"),
                    )
                    .with_span(chrono.span.clone()),
                );
            }
        }
    }
    if let Some(cycle) = chrono.find_cycle() {
        out.push(
            Diagnostic::error(
                RuleCode::ChronoCycle,
                format!("chronology is cyclic through {}", cycle.join(", ")),
            )
            .with_span(chrono.span.clone()),
        );
    }
}

fn check_justification(model: &Model, events: &[EventDef], chrono: &Chronology, out: &mut Vec<Diagnostic>) {
    let stages_of = |id: &str| -> BTreeSet<ElementId> {
        behavior::flatten(events, id)
            .unwrap_or_default()
            .into_iter()
            .filter(|e| model.stage(*e).is_some())
            .collect()
    };
    let mut succ: BTreeMap<ElementId, Vec<ElementId>> = BTreeMap::new();
    for (from, to) in model
        .flows()
        .iter()
        .map(|f| (f.from, f.to))
        .chain(model.triggers().iter().map(|t| (t.from, t.to)))
    {
        succ.entry(from).or_default().push(to);
    }
    for (a, b) in &chrono.edges {
        let (ra, rb) = (stages_of(a), stages_of(b));
        if ra.is_empty() || rb.is_empty() || !ra.is_disjoint(&rb) {
            continue;
        }
        let mut seen = ra.clone();
        let mut stack: Vec<_> = ra.iter().copied().collect();
        let mut linked = false;
        while let Some(s) = stack.pop() {
            if rb.contains(&s) {
                linked = true;
                break;
            }
            for &n in succ.get(&s).into_iter().flatten() {
                if seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        if !linked {
            out.push(
                Diagnostic::warning(
                    RuleCode::ChronoUnjustified,
                    format!("no flow or trigger dependency justifies {a} -> {b}"),
                )
                .with_span(chrono.span.clone()),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::normalize;
    use StageKind::*;

    fn codes(d: &[Diagnostic]) -> Vec<RuleCode> {
        d.iter().map(|d| d.code).collect()
    }

    #[test]
    fn legality_matrix() {
        assert!(legality(Release, Transfer, true));
        assert!(!legality(Release, Receive, true));
        assert!(legality(Transfer, Transfer, false));
        assert!(!legality(Transfer, Transfer, true));
        let same = StageKind::ALL
            .iter()
            .flat_map(|&a| StageKind::ALL.iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| legality(a, b, true))
            .count();
        let cross = StageKind::ALL
            .iter()
            .flat_map(|&a| StageKind::ALL.iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| legality(a, b, false))
            .count();
        assert_eq!((same, cross), (7, 1));
    }

    fn process_to_process() -> Model {
        let mut m = Model::new();
        for name in ["A", "B"] {
            let t = m.add_thimac(None, name).unwrap();
            m.add_stage(t, Process).unwrap();
        }
        let a = m.resolve_thimac("A").unwrap();
        m.add_stage(a, Create).unwrap();
        m.add_flow_path("A.create", "A.process").unwrap();
        m.add_flow_path("A.process", "B.process").unwrap();
        m
    }

    #[test]
    fn illegal_before_normalization_clean_after() {
        let m = process_to_process();
        let d = validate(&m, &[], None);
        assert!(codes(&d).contains(&RuleCode::FlowIllegal));
        let n = normalize(&m).unwrap();
        let d = validate(&n, &[], None);
        assert!(!has_errors(&d), "{d:?}");
    }

    #[test]
    fn lone_machine_without_origin() {
        let mut m = Model::new();
        let a = m.add_thimac(None, "A").unwrap();
        for k in [Receive, Process, Release, Transfer] {
            m.add_stage(a, k).unwrap();
        }
        m.add_flow_path("A.receive", "A.process").unwrap();
        m.add_flow_path("A.process", "A.release").unwrap();
        m.add_flow_path("A.release", "A.transfer").unwrap();
        let d = validate(&m, &[], None);
        assert_eq!(codes(&d), [RuleCode::OriginMissing]);

        // a create stage feeding the chain supplies the origin
        m.add_stage(a, Create).unwrap();
        m.add_flow_path("A.create", "A.process").unwrap();
        assert!(validate(&m, &[], None).is_empty());
    }

    #[test]
    fn boundary_transfer_is_an_origin() {
        let mut m = Model::new();
        let a = m.add_thimac(None, "A").unwrap();
        for k in [Transfer, Receive, Process] {
            m.add_stage(a, k).unwrap();
        }
        m.add_flow_path("A.transfer", "A.receive").unwrap();
        m.add_flow_path("A.receive", "A.process").unwrap();
        assert!(validate(&m, &[], None).is_empty());
    }

    #[test]
    fn self_trigger_and_unreachable_warn() {
        let mut m = Model::new();
        let a = m.add_thimac(None, "A").unwrap();
        m.add_stage(a, Create).unwrap();
        m.add_stage(a, Process).unwrap();
        m.add_trigger_path("A.create", "A.create").unwrap();
        let d = validate(&m, &[], None);
        assert_eq!(codes(&d), [RuleCode::StageUnreachable, RuleCode::TriggerSelf]);
        assert!(!has_errors(&d));
    }

    #[test]
    fn chronology_cycle_and_unknown() {
        let mut m = Model::new();
        let a = m.add_thimac(None, "A").unwrap();
        let c = m.add_stage(a, Create).unwrap();
        let p = m.add_stage(a, Process).unwrap();
        m.add_flow(c, p).unwrap();
        let events = vec![
            EventDef::from_stages(&m, "E1", [c]),
            EventDef::from_stages(&m, "E2", [p]),
        ];
        let mut chrono = Chronology::default();
        chrono.add_edge("E1", "E2");
        chrono.add_edge("E2", "E1");
        chrono.add_node("E9");
        let d = validate(&m, &events, Some(&chrono));
        assert!(codes(&d).contains(&RuleCode::ChronoCycle));
        assert!(codes(&d).contains(&RuleCode::ChronoUnknownEvent));
    }

    #[test]
    fn empty_event_and_unknown_subevent() {
        let m = Model::new();
        let mut e = EventDef::new("E");
        e.subevents.push("Missing".into());
        let d = validate(&m, &[e], None);
        assert!(codes(&d).contains(&RuleCode::EventEmpty));
        assert!(codes(&d).contains(&RuleCode::EventUnknownSubevent));
    }

    #[test]
    fn justification_lint_is_opt_in() {
        let mut m = Model::new();
        for name in ["A", "B"] {
            let t = m.add_thimac(None, name).unwrap();
            let c = m.add_stage(t, Create).unwrap();
            let p = m.add_stage(t, Process).unwrap();
            m.add_flow(c, p).unwrap();
        }
        let events = vec![
            EventDef::from_stages(&m, "EA", [m.resolve_stage("A.create").unwrap()]),
            EventDef::from_stages(&m, "EB", [m.resolve_stage("B.create").unwrap()]),
        ];
        let mut chrono = Chronology::default();
        chrono.add_edge("EA", "EB");
        assert!(validate(&m, &events, Some(&chrono)).is_empty());
        let opts = ValidateOptions {
            chronology_justification: true,
            ..Default::default()
        };
        let d = validate_with(&m, &events, Some(&chrono), opts);
        assert_eq!(codes(&d), [RuleCode::ChronoUnjustified]);
    }

    #[test]
    fn diagnostics_sorted_by_span() {
        let file: std::sync::Arc<str> = "m.tm".into();
        let mut d = vec![
            Diagnostic::error(RuleCode::FlowIllegal, "b").with_span(Some(SourceSpan::new(file.clone(), (3, 1), (3, 4)))),
            Diagnostic::warning(RuleCode::TriggerSelf, "a").with_span(Some(SourceSpan::new(file.clone(), (1, 1), (1, 4)))),
            Diagnostic::error(RuleCode::ChronoCycle, "c").with_span(Some(SourceSpan::new(file, (1, 1), (1, 4)))),
        ];
        sort_diagnostics(&mut d);
        assert_eq!(codes(&d), [RuleCode::ChronoCycle, RuleCode::TriggerSelf, RuleCode::FlowIllegal]);
    }
}
