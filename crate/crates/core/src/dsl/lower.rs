use std::collections::BTreeSet;

use crate::behavior::{induced_region, Chronology, EventDef};
use crate::model::{ElementId, Model, ModelError};
use crate::span::SourceSpan;
use crate::validate::{Diagnostic, RuleCode};

use super::parser::{ChronoEntry, EventDecl, Item, Path, ThimacDecl};

pub struct Lowered {
    pub model: Model,
    pub events: Vec<EventDef>,
    pub chronology: Option<Chronology>,
    pub diagnostics: Vec<Diagnostic>,
}

struct Lowerer {
    model: Model,
    diags: Vec<Diagnostic>,
}

impl Lowerer {
    fn report(&mut self, code: RuleCode, message: String, span: &SourceSpan) {
        self.diags.push(Diagnostic::error(code, message).with_span(Some(span.clone())));
    }

    fn thimac(&mut self, parent: Option<ElementId>, decl: &ThimacDecl) {
        let id = match self.model.add_thimac(parent, &decl.name) {
            Ok(id) => id,
            Err(e) => {
                self.report(RuleCode::DuplicateDefinition, e.to_string(), &decl.span);
                return;
            }
        };
        self.model.set_span(id, decl.span.clone());
        self.model.set_annotation(id, decl.annotation);
        for s in &decl.stages {
            match self.model.add_stage(id, s.kind) {
                Ok(sid) => {
                    self.model.set_span(sid, s.span.clone());
                    self.model.set_annotation(sid, s.annotation);
                }
                Err(e) => self.report(RuleCode::DuplicateDefinition, e.to_string(), &s.span),
            }
        }
        for child in &decl.children {
            self.thimac(Some(id), child);
        }
    }

    fn resolve(&mut self, path: &Path) -> Option<ElementId> {
        let text = path.text();
        let found = self.model.resolve_stage(&text);
        if found.is_none() {
            let message = match (path.kind, self.model.resolve_thimac(&path.thimacs.join("."))) {
                (_, None) => format!("no thimac named `{}`", path.thimacs.join(".")),
                (Some(k), Some(_)) => format!("thimac `{}` has no {k} stage", path.thimacs.join(".")),
                (None, Some(_)) => format!("thimac `{text}` has no transfer stage for a box-to-box arrow"),
            };
            self.report(RuleCode::UnresolvedPath, message, &path.span);
        }
        found
    }

    fn edge(&mut self, from: &Path, to: &Path, trigger: bool) {
        let (Some(a), Some(b)) = (self.resolve(from), self.resolve(to)) else {
            return;
        };
        let span = from.span.to(&to.span);
        let existing = if trigger {
            self.model.find_trigger(a, b)
        } else {
            self.model.find_flow(a, b)
        };
        if existing.is_some() {
            let arrow = if trigger { "~>" } else { "->" };
            self.diags.push(
                Diagnostic::warning(
                    RuleCode::DuplicateEdge,
                    format!("duplicate edge {}{arrow}{} collapsed", from.text(), to.text()),
                )
                .with_span(Some(span)),
            );
            return;
        }
        let added = if trigger {
            self.model.add_trigger(a, b)
        } else {
            self.model.add_flow(a, b)
        };
        match added {
            Ok(id) => self.model.set_span(id, span),
            Err(e @ ModelError::SelfFlow(_)) => self.report(RuleCode::FlowIllegal, e.to_string(), &span),
            Err(e) => self.report(RuleCode::UnresolvedPath, e.to_string(), &span),
        }
    }

    fn event(&mut self, decl: &EventDecl) -> EventDef {
        let stages: BTreeSet<ElementId> = decl.region.iter().filter_map(|p| self.resolve(p)).collect();
        let mut event = EventDef::new(decl.id.clone());
        event.label = decl.label.clone();
        event.region = induced_region(&self.model, stages);
        event.subevents = decl.contains.iter().map(|(id, _)| id.clone()).collect();
        event.span = Some(decl.span.clone());
        if let Some((n, span)) = &decl.repeat {
            match u32::try_from(*n) {
                Ok(m) if m >= 1 => event.multiplicity = m,
                _ => self.report(
                    RuleCode::InvalidRepeat,
                    format!("repeat count must be between 1 and {}, found {n}", u32::MAX),
                    span,
                ),
            }
        }
        event
    }
}

/// Lowers every thimac first and the remaining items in source order.
/// Paths may name thimacs declared later in the file.
pub fn lower(items: &[Item]) -> Lowered {
    let mut l = Lowerer {
        model: Model::new(),
        diags: Vec::new(),
    };
    for item in items {
        if let Item::Thimac(decl) = item {
            l.thimac(None, decl);
        }
    }
    for item in items {
        match item {
            Item::Flow(paths, _) => {
                for pair in paths.windows(2) {
                    l.edge(&pair[0], &pair[1], false);
                }
            }
            Item::Trigger(from, to, _) => l.edge(from, to, true),
            _ => {}
        }
    }
    let mut events: Vec<EventDef> = Vec::new();
    let mut chronology: Option<Chronology> = None;
    for item in items {
        match item {
            Item::Event(decl) => {
                let event = l.event(decl);
                if events.iter().any(|e| e.id == event.id) {
                    l.report(
                        RuleCode::DuplicateDefinition,
                        format!("event `{}` is already defined", event.id),
                        &decl.span,
                    );
                } else {
                    events.push(event);
                }
            }
            Item::Chronology(entries, span) => {
                if chronology.is_some() {
                    l.report(RuleCode::DuplicateDefinition, "only one chronology block is allowed".into(), span);
                    continue;
                }
                let mut chrono = Chronology {
                    span: Some(span.clone()),
                    ..Chronology::default()
                };
                for entry in entries {
                    match entry {
                        ChronoEntry::Node(id, _) => chrono.add_node(id),
                        ChronoEntry::Edge(a, b, s) => {
                            if chrono.edges.iter().any(|(x, y)| x == a && y == b) {
                                l.diags.push(
                                    Diagnostic::warning(
                                        RuleCode::DuplicateEdge,
                                        format!("duplicate chronology edge {a} -> {b}"),
                                    )
                                    .with_span(Some(s.clone())),
                                );
                            }
                            chrono.add_edge(a, b);
                        }
                    }
                }
                chronology = Some(chrono);
            }
            _ => {}
        }
    }
    Lowered {
        model: l.model,
        events,
        chronology,
        diagnostics: l.diags,
    }
}
