use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::behavior::{Chronology, EventDef};
use crate::model::{ElementId, Model, StageKind};
use crate::validate::{Diagnostic, RuleCode};

use super::ParseResult;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    thimacs: Vec<ThimacDto>,
    flows: Vec<EdgeDto>,
    triggers: Vec<EdgeDto>,
    events: Vec<EventDto>,
    chronology: Option<ChronologyDto>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThimacDto {
    name: String,
    parent: Option<String>,
    #[serde(default)]
    annotation: Option<u32>,
    stages: Vec<StageDto>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StageDto {
    kind: String,
    #[serde(default)]
    annotation: Option<u32>,
    #[serde(default)]
    implicit: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDto {
    from: String,
    to: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventDto {
    id: String,
    #[serde(default)]
    label: Option<String>,
    region: Vec<String>,
    #[serde(default = "one")]
    repeat: u32,
    #[serde(default)]
    contains: Vec<String>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChronologyDto {
    nodes: Vec<String>,
    edges: Vec<(String, String)>,
}

fn document(result: &ParseResult) -> Document {
    let empty = Model::new();
    let model = result.model.as_ref().unwrap_or(&empty);
    let thimacs = model
        .thimacs_preorder()
        .into_iter()
        .map(|id| {
            let t = model.thimac(id).unwrap();
            let mut stages: Vec<_> = t.stages().map(|(_, s)| model.stage(s).unwrap()).collect();
            stages.sort_by_key(|s| s.id);
            ThimacDto {
                name: model.qualified_name(id),
                parent: t.parent.map(|p| model.qualified_name(p)),
                annotation: t.annotation,
                stages: stages
                    .into_iter()
                    .map(|s| StageDto {
                        kind: s.kind.as_str().to_string(),
                        annotation: s.annotation,
                        implicit: s.implicit,
                    })
                    .collect(),
            }
        })
        .collect();
    let edge = |from, to| EdgeDto {
        from: model.qualified_name(from),
        to: model.qualified_name(to),
    };
    Document {
        thimacs,
        flows: model.flows().iter().map(|f| edge(f.from, f.to)).collect(),
        triggers: model.triggers().iter().map(|t| edge(t.from, t.to)).collect(),
        events: result
            .events
            .iter()
            .map(|e| EventDto {
                id: e.id.clone(),
                label: e.label.clone(),
                region: e.region.iter().map(|&r| model.qualified_name(r)).collect(),
                repeat: e.multiplicity,
                contains: e.subevents.clone(),
            })
            .collect(),
        chronology: result.chronology.as_ref().map(|c| ChronologyDto {
            nodes: c.nodes.clone(),
            edges: c.edges.clone(),
        }),
    }
}

/// The parse result as a JSON document keyed by qualified names.
pub fn to_json(result: &ParseResult) -> String {
    serde_json::to_string_pretty(&document(result)).expect("document serializes")
}

/// Same document as [`to_json`] without whitespace.
pub fn to_json_compact(result: &ParseResult) -> String {
    serde_json::to_string(&document(result)).expect("document serializes")
}

fn dangling(what: &str, name: &str) -> Diagnostic {
    Diagnostic::error(RuleCode::DanglingReference, format!("{what} `{name}` does not resolve"))
}

fn resolve_element(model: &Model, name: &str) -> Option<ElementId> {
    if let Some((a, b)) = name.split_once("->") {
        model.find_flow(model.resolve_stage(a)?, model.resolve_stage(b)?)
    } else if let Some((a, b)) = name.split_once("~>") {
        model.find_trigger(model.resolve_stage(a)?, model.resolve_stage(b)?)
    } else {
        model.resolve_stage(name)
    }
}

pub fn from_json(text: &str) -> ParseResult {
    let doc: Document = match serde_json::from_str(text) {
        Ok(d) => d,
        Err(e) => {
            return ParseResult::failed(vec![Diagnostic::error(
                RuleCode::JsonMalformed,
                format!("line {} column {}: {e}", e.line(), e.column()),
            )])
        }
    };
    let mut diags = Vec::new();
    let mut model = Model::new();
    for t in &doc.thimacs {
        let (parent_path, name) = match t.name.rsplit_once('.') {
            Some((p, n)) => (Some(p), n),
            None => (None, t.name.as_str()),
        };
        if parent_path != t.parent.as_deref() {
            diags.push(Diagnostic::error(
                RuleCode::JsonMalformed,
                format!("thimac `{}` lists parent {:?}", t.name, t.parent),
            ));
            continue;
        }
        let parent = match parent_path {
            Some(p) => match model.resolve_thimac(p) {
                Some(id) => Some(id),
                None => {
                    diags.push(dangling("parent thimac", p));
                    continue;
                }
            },
            None => None,
        };
        let id = match model.add_thimac(parent, name) {
            Ok(id) => id,
            Err(e) => {
                diags.push(Diagnostic::error(RuleCode::DuplicateDefinition, e.to_string()));
                continue;
            }
        };
        model.set_annotation(id, t.annotation);
        for s in &t.stages {
            let kind = match s.kind.parse::<StageKind>() {
                Ok(k) => k,
                Err(e) => {
                    diags.push(Diagnostic::error(RuleCode::UnknownStageKind, e.to_string()));
                    continue;
                }
            };
            match model.insert_stage(id, kind, s.implicit) {
                Ok(sid) => model.set_annotation(sid, s.annotation),
                Err(e) => diags.push(Diagnostic::error(RuleCode::DuplicateDefinition, e.to_string())),
            }
        }
    }
    for (edges, trigger) in [(&doc.flows, false), (&doc.triggers, true)] {
        for e in edges {
            let (Some(a), Some(b)) = (model.resolve_stage(&e.from), model.resolve_stage(&e.to)) else {
                let arrow = if trigger { "~>" } else { "->" };
                diags.push(dangling("edge", &format!("{}{arrow}{}", e.from, e.to)));
                continue;
            };
            let added = if trigger { model.add_trigger(a, b) } else { model.add_flow(a, b) };
            if let Err(err) = added {
                diags.push(Diagnostic::error(RuleCode::FlowIllegal, err.to_string()));
            }
        }
    }
    let mut events = Vec::new();
    for e in &doc.events {
        let mut region = BTreeSet::new();
        for name in &e.region {
            match resolve_element(&model, name) {
                Some(id) => {
                    region.insert(id);
                }
                None => diags.push(dangling("region element", name)),
            }
        }
        if e.repeat == 0 {
            diags.push(Diagnostic::error(RuleCode::InvalidRepeat, format!("event `{}` has repeat 0", e.id)));
        }
        let mut event = EventDef::new(e.id.clone());
        event.label = e.label.clone();
        event.region = region;
        event.multiplicity = e.repeat.max(1);
        event.subevents = e.contains.clone();
        events.push(event);
    }
    let chronology = doc.chronology.map(|c| {
        let mut chrono = Chronology::default();
        for n in &c.nodes {
            chrono.add_node(n);
        }
        for (a, b) in &c.edges {
            chrono.add_edge(a, b);
        }
        chrono
    });
    ParseResult::new(model, events, chronology, diags)
}
