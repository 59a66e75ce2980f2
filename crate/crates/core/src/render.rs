//! Graphviz DOT output.
//!
//! Thimacs become nested clusters and stages become nodes labeled with
//! their kind. Flows are solid edges, triggers dashed. Node shapes by kind:
//!
//! | kind     | shape    |
//! |----------|----------|
//! | create   | ellipse  |
//! | process  | box      |
//! | release  | house    |
//! | transfer | cds      |
//! | receive  | invhouse |
//!
//! Event overlays list on each node the events whose regions hold it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use thiserror::Error;

use crate::behavior::{self, Chronology, EventDef};
use crate::model::{ElementId, Model, StageKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RenderMode {
    #[default]
    Static,
    EventOverlay,
    Chronology,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RenderOptions {
    pub mode: RenderMode,
    pub highlight: Option<String>,
    /// Hide stages inserted by normalization.
    pub simplified: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenderError {
    #[error("no event named `{0}` to highlight")]
    UnknownHighlightEvent(String),
    #[error("highlighting an event requires event overlay mode")]
    HighlightRequiresOverlay,
}

const HIGHLIGHT_FILL: &str = "#ffe9a8";

pub fn shape(kind: StageKind) -> &'static str {
    match kind {
        StageKind::Create => "ellipse",
        StageKind::Process => "box",
        StageKind::Release => "house",
        StageKind::Transfer => "cds",
        StageKind::Receive => "invhouse",
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

struct Overlay {
    /// Events whose region holds each stage, in declaration order.
    memberships: BTreeMap<ElementId, Vec<String>>,
    highlight: Option<BTreeSet<ElementId>>,
}

/// Flow edges to draw. With hidden stages, each path that runs through
/// hidden stages collapses into one edge between its visible ends. A path
/// entering a hidden transfer from another machine continues inside that
/// machine, and one entering from inside leaves it.
fn visible_flows(model: &Model, hidden: &BTreeSet<ElementId>) -> Vec<(ElementId, ElementId)> {
    if hidden.is_empty() {
        return model.flows().iter().map(|f| (f.from, f.to)).collect();
    }
    let mut succ: BTreeMap<ElementId, Vec<ElementId>> = BTreeMap::new();
    for f in model.flows() {
        succ.entry(f.from).or_default().push(f.to);
    }
    let mut out = Vec::new();
    let mut seen_pairs = BTreeSet::new();
    for f in model.flows() {
        if hidden.contains(&f.from) {
            continue;
        }
        let mut stack = vec![(f.to, !model.same_machine(f.from, f.to))];
        let mut visited = BTreeSet::new();
        while let Some((s, arrived_across)) = stack.pop() {
            if !visited.insert((s, arrived_across)) {
                continue;
            }
            if hidden.contains(&s) {
                let is_transfer = model.stage(s).is_some_and(|st| st.kind == StageKind::Transfer);
                for &n in succ.get(&s).into_iter().flatten().rev() {
                    let across = !model.same_machine(s, n);
                    if !is_transfer || across != arrived_across {
                        stack.push((n, across));
                    }
                }
            } else if seen_pairs.insert((f.from, s)) {
                out.push((f.from, s));
            }
        }
    }
    out
}

struct Writer<'a> {
    model: &'a Model,
    hidden: BTreeSet<ElementId>,
    overlay: Option<Overlay>,
    out: String,
}

impl Writer<'_> {
    fn thimac(&mut self, id: ElementId, depth: usize) {
        let model = self.model;
        let t = model.thimac(id).unwrap();
        let pad = "  ".repeat(depth);
        let _ = writeln!(self.out, "{pad}subgraph {} {{", quote(&format!("cluster_{}", model.qualified_name(id))));
        let _ = writeln!(self.out, "{pad}  label={};", quote(&t.name));
        let mut stages: Vec<_> = t.stages().map(|(_, s)| model.stage(s).unwrap()).collect();
        stages.sort_by_key(|s| s.id);
        for s in stages {
            if self.hidden.contains(&s.id) {
                continue;
            }
            let mut label = s.kind.as_str().to_string();
            let mut attrs = format!("shape={}", shape(s.kind));
            if let Some(overlay) = &self.overlay {
                match &overlay.highlight {
                    Some(region) if region.contains(&s.id) => {
                        let _ = write!(attrs, ", style=filled, fillcolor={}", quote(HIGHLIGHT_FILL));
                    }
                    Some(_) => {}
                    None => {
                        if let Some(events) = overlay.memberships.get(&s.id) {
                            let _ = write!(label, "\n[{}]", events.join(","));
                        }
                    }
                }
            }
            let _ = writeln!(
                self.out,
                "{pad}  {} [label={}, {attrs}];",
                quote(&model.qualified_name(s.id)),
                quote(&label)
            );
        }
        for &c in &t.children {
            self.thimac(c, depth + 1);
        }
        let _ = writeln!(self.out, "{pad}}}");
    }

    fn edge(&mut self, from: ElementId, to: ElementId, id: Option<ElementId>, dashed: bool) {
        let mut attrs = Vec::new();
        if dashed {
            attrs.push("style=dashed".to_string());
        }
        if let (Some(overlay), Some(id)) = (&self.overlay, id) {
            if overlay.highlight.as_ref().is_some_and(|r| r.contains(&id)) {
                attrs.push("penwidth=2".to_string());
            }
        }
        let attrs = if attrs.is_empty() {
            String::new()
        } else {
            format!(" [{}]", attrs.join(", "))
        };
        let _ = writeln!(
            self.out,
            "  {} -> {}{attrs};",
            quote(&self.model.qualified_name(from)),
            quote(&self.model.qualified_name(to))
        );
    }
}

fn preamble() -> String {
    String::from("digraph tm {\n  compound=true;\n  node [shape=box];\n")
}

fn render_chronology(events: &[EventDef], chronology: Option<&Chronology>) -> String {
    let mut out = preamble();
    let nodes: Vec<&str> = match chronology {
        Some(c) => c.nodes.iter().map(String::as_str).collect(),
        None => events.iter().map(|e| e.id.as_str()).collect(),
    };
    for id in nodes {
        let event = events.iter().find(|e| e.id == id);
        let mut label = id.to_string();
        if let Some(text) = event.and_then(|e| e.label.as_deref()) {
            label.push('\n');
            label.push_str(text);
        }
        if let Some(n) = event.map(behavior::instances).filter(|&n| n > 1) {
            let _ = write!(label, "\n×{n}");
        }
        let _ = writeln!(out, "  {} [label={}, shape=ellipse];", quote(id), quote(&label));
    }
    for (a, b) in chronology.map(|c| c.edges.as_slice()).unwrap_or_default() {
        let _ = writeln!(out, "  {} -> {};", quote(a), quote(b));
    }
    out.push_str("}\n");
    out
}

pub fn render_dot(
    model: &Model,
    events: &[EventDef],
    chronology: Option<&Chronology>,
    opts: &RenderOptions,
) -> Result<String, RenderError> {
    if opts.highlight.is_some() && opts.mode != RenderMode::EventOverlay {
        return Err(RenderError::HighlightRequiresOverlay);
    }
    if opts.mode == RenderMode::Chronology {
        return Ok(render_chronology(events, chronology));
    }
    let flat = |id: &str| behavior::flatten(events, id).unwrap_or_default();
    let overlay = (opts.mode == RenderMode::EventOverlay)
        .then(|| -> Result<Overlay, RenderError> {
            let highlight = match &opts.highlight {
                Some(h) if events.iter().any(|e| &e.id == h) => Some(flat(h)),
                Some(h) => return Err(RenderError::UnknownHighlightEvent(h.clone())),
                None => None,
            };
            let mut memberships: BTreeMap<ElementId, Vec<String>> = BTreeMap::new();
            for e in events {
                for s in flat(&e.id) {
                    memberships.entry(s).or_default().push(e.id.clone());
                }
            }
            Ok(Overlay { memberships, highlight })
        })
        .transpose()?;
    let hidden: BTreeSet<ElementId> = if opts.simplified {
        model.stages().filter(|s| s.implicit).map(|s| s.id).collect()
    } else {
        BTreeSet::new()
    };
    let mut w = Writer {
        model,
        hidden,
        overlay,
        out: preamble(),
    };
    for &r in model.roots() {
        w.thimac(r, 1);
    }
    let flows = visible_flows(model, &w.hidden);
    for (a, b) in flows {
        let id = model.find_flow(a, b);
        w.edge(a, b, id, false);
    }
    for t in model.triggers() {
        if !w.hidden.contains(&t.from) && !w.hidden.contains(&t.to) {
            w.edge(t.from, t.to, Some(t.id), true);
        }
    }
    if let Some(overlay) = &w.overlay {
        let mut legend = String::new();
        for e in events {
            if overlay.highlight.is_some() && opts.highlight.as_deref() != Some(e.id.as_str()) {
                continue;
            }
            let line = match &e.label {
                Some(label) => format!("{}: {label}", e.id),
                None => e.id.clone(),
            };
            let quoted = quote(&line);
            legend.push_str(&quoted[1..quoted.len() - 1]);
            legend.push_str("\\l");
        }
        let _ = writeln!(w.out, "  subgraph \"cluster_legend\" {{");
        let _ = writeln!(w.out, "    label=\"events\";");
        let _ = writeln!(w.out, "    \"legend\" [shape=note, label=\"{legend}\"];");
        let _ = writeln!(w.out, "  }}");
    }
    w.out.push_str("}\n");
    Ok(w.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn static_dot(src: &str) -> String {
        let r = parse(src, "t.tm");
        render_dot(r.model.as_ref().unwrap(), &r.events, r.chronology.as_ref(), &RenderOptions::default()).unwrap()
    }

    #[test]
    fn empty_model() {
        assert_eq!(static_dot(""), "digraph tm {\n  compound=true;\n  node [shape=box];\n}\n");
    }

    #[test]
    fn five_stage_machine() {
        let dot = static_dot(
            "thimac M { stage create; stage process; stage release; stage transfer; stage receive; }
             flow M.create -> M.process; trigger M.process ~> M.create;",
        );
        assert_eq!(dot.matches("subgraph \"cluster_M\"").count(), 1);
        assert_eq!(dot.matches("[label=").count(), 5);
        assert!(dot.contains("\"M.create\" -> \"M.process\";"));
        assert!(dot.contains("\"M.process\" -> \"M.create\" [style=dashed];"));
        assert!(dot.contains("shape=cds"));
    }

    #[test]
    fn highlight_errors() {
        let m = Model::new();
        let opts = RenderOptions {
            mode: RenderMode::Static,
            highlight: Some("E".into()),
            simplified: false,
        };
        assert_eq!(render_dot(&m, &[], None, &opts), Err(RenderError::HighlightRequiresOverlay));
        let opts = RenderOptions {
            mode: RenderMode::EventOverlay,
            ..opts
        };
        assert_eq!(
            render_dot(&m, &[], None, &opts),
            Err(RenderError::UnknownHighlightEvent("E".into()))
        );
    }

    #[test]
    fn simplified_contracts_hidden_stages() {
        let r = parse(
            "thimac A { stage create; stage process; } thimac B { stage process; }
             flow A.create -> A.process -> B.process;",
            "t.tm",
        );
        let n = crate::normalize::normalize(r.model.as_ref().unwrap()).unwrap();
        let opts = RenderOptions {
            simplified: true,
            ..RenderOptions::default()
        };
        let dot = render_dot(&n, &[], None, &opts).unwrap();
        assert_eq!(dot.matches("[label=").count(), 3);
        assert!(dot.contains("\"A.process\" -> \"B.process\";"));
    }

    #[test]
    fn overlay_marks_membership() {
        let r = parse(
            "thimac A { stage create; stage process; } flow A.create -> A.process;
             event E1 { region { A.create; } } event E2 { region { A.create; A.process; } }",
            "t.tm",
        );
        let m = r.model.as_ref().unwrap();
        let opts = RenderOptions {
            mode: RenderMode::EventOverlay,
            ..RenderOptions::default()
        };
        let dot = render_dot(m, &r.events, None, &opts).unwrap();
        assert!(dot.contains("label=\"create\\n[E1,E2]\""));
        let opts = RenderOptions {
            highlight: Some("E1".into()),
            ..opts
        };
        let dot = render_dot(m, &r.events, None, &opts).unwrap();
        assert_eq!(dot.matches("style=filled").count(), 1);
    }
}
