//! The static thinging-machine model.
//!
//! A [`Model`] is a forest of thimacs. Each thimac owns at most one stage of
//! every [`StageKind`] and may nest further thimacs (the things it handles).
//! Stages are wired together by solid flow edges and dashed trigger edges.
//!
//! Construction is append-only. Every element gets an [`ElementId`] drawn
//! from one counter. Ids are unique across element kinds and increase in
//! declaration order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::span::SourceSpan;

/// The five generic stages of a thinging machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    Create,
    Process,
    Release,
    Transfer,
    Receive,
}

impl StageKind {
    pub const ALL: [StageKind; 5] = [
        StageKind::Create,
        StageKind::Process,
        StageKind::Release,
        StageKind::Transfer,
        StageKind::Receive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageKind::Create => "create",
            StageKind::Process => "process",
            StageKind::Release => "release",
            StageKind::Transfer => "transfer",
            StageKind::Receive => "receive",
        }
    }

    /// Resolves a stage keyword. `arrive` and `accept` are refinements of
    /// the receive stage and map onto it.
    pub fn from_keyword(word: &str) -> Option<StageKind> {
        match word {
            "create" => Some(StageKind::Create),
            "process" => Some(StageKind::Process),
            "release" => Some(StageKind::Release),
            "transfer" => Some(StageKind::Transfer),
            "receive" | "arrive" | "accept" => Some(StageKind::Receive),
            _ => None,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StageKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StageKind::from_keyword(s).ok_or_else(|| ModelError::UnknownStageKind(s.to_string()))
    }
}

/// Identifier of a thimac, stage or edge within one model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementId(pub u32);

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Thimac,
    Stage,
    Flow,
    Trigger,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate name `{0}` among siblings")]
    DuplicateName(String),
    #[error("unknown parent thimac {0}")]
    UnknownParent(ElementId),
    #[error("unknown thimac {0}")]
    UnknownThimac(ElementId),
    #[error("thimac `{thimac}` already has a {kind} stage")]
    DuplicateStageKind { thimac: String, kind: StageKind },
    #[error("unknown endpoint `{0}`")]
    UnknownEndpoint(String),
    #[error("flow from `{0}` to itself")]
    SelfFlow(String),
    #[error("invalid identifier `{0}`")]
    InvalidName(String),
    #[error("unknown stage kind `{0}`")]
    UnknownStageKind(String),
    #[error("flow `{0}` admits no legal expansion")]
    AmbiguousExpansion(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thimac {
    pub id: ElementId,
    pub name: String,
    pub parent: Option<ElementId>,
    stages: [Option<ElementId>; 5],
    pub children: Vec<ElementId>,
    pub annotation: Option<u32>,
    pub span: Option<SourceSpan>,
}

impl Thimac {
    pub fn stage(&self, kind: StageKind) -> Option<ElementId> {
        self.stages[kind.index()]
    }

    /// Declared stages as `(kind, id)` pairs, in kind order.
    pub fn stages(&self) -> impl Iterator<Item = (StageKind, ElementId)> + '_ {
        StageKind::ALL
            .iter()
            .filter_map(move |&k| self.stages[k.index()].map(|id| (k, id)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage {
    pub id: ElementId,
    pub owner: ElementId,
    pub kind: StageKind,
    pub annotation: Option<u32>,
    /// Inserted by normalization rather than declared.
    pub implicit: bool,
    pub span: Option<SourceSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowEdge {
    pub id: ElementId,
    pub from: ElementId,
    pub to: ElementId,
    /// Stages created by normalization while expanding the source edge this
    /// one descends from. Empty in source form.
    pub implicit_segments: Vec<ElementId>,
    pub span: Option<SourceSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerEdge {
    pub id: ElementId,
    pub from: ElementId,
    pub to: ElementId,
    pub span: Option<SourceSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Model {
    next_id: u32,
    roots: Vec<ElementId>,
    thimacs: BTreeMap<ElementId, Thimac>,
    stages: BTreeMap<ElementId, Stage>,
    flows: Vec<FlowEdge>,
    triggers: Vec<TriggerEdge>,
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    fn fresh_id(&mut self) -> ElementId {
        let id = ElementId(self.next_id);
        self.next_id += 1;
        id
    }

    pub fn add_thimac(&mut self, parent: Option<ElementId>, name: &str) -> Result<ElementId, ModelError> {
        if !is_identifier(name) || StageKind::from_keyword(name).is_some() {
            return Err(ModelError::InvalidName(name.to_string()));
        }
        let siblings = match parent {
            Some(p) => &self.thimacs.get(&p).ok_or(ModelError::UnknownParent(p))?.children,
            None => &self.roots,
        };
        if siblings.iter().any(|s| self.thimacs[s].name == name) {
            return Err(ModelError::DuplicateName(name.to_string()));
        }
        let id = self.fresh_id();
        self.thimacs.insert(
            id,
            Thimac {
                id,
                name: name.to_string(),
                parent,
                stages: [None; 5],
                children: Vec::new(),
                annotation: None,
                span: None,
            },
        );
        match parent {
            Some(p) => self.thimacs.get_mut(&p).unwrap().children.push(id),
            None => self.roots.push(id),
        }
        Ok(id)
    }

    pub fn add_stage(&mut self, thimac: ElementId, kind: StageKind) -> Result<ElementId, ModelError> {
        self.insert_stage(thimac, kind, false)
    }

    pub(crate) fn insert_stage(
        &mut self,
        thimac: ElementId,
        kind: StageKind,
        implicit: bool,
    ) -> Result<ElementId, ModelError> {
        let owner = self.thimacs.get(&thimac).ok_or(ModelError::UnknownThimac(thimac))?;
        if owner.stage(kind).is_some() {
            return Err(ModelError::DuplicateStageKind {
                thimac: self.qualified_name(thimac),
                kind,
            });
        }
        let id = self.fresh_id();
        self.thimacs.get_mut(&thimac).unwrap().stages[kind.index()] = Some(id);
        self.stages.insert(
            id,
            Stage {
                id,
                owner: thimac,
                kind,
                annotation: None,
                implicit,
                span: None,
            },
        );
        Ok(id)
    }

    /// Appends a flow edge. Adding an edge whose endpoints match an existing
    /// flow returns the existing id; see [`Model::find_flow`] to detect this.
    pub fn add_flow(&mut self, from: ElementId, to: ElementId) -> Result<ElementId, ModelError> {
        self.check_stage(from)?;
        self.check_stage(to)?;
        if from == to {
            return Err(ModelError::SelfFlow(self.qualified_name(from)));
        }
        if let Some(existing) = self.find_flow(from, to) {
            return Ok(existing);
        }
        let id = self.fresh_id();
        self.flows.push(FlowEdge {
            id,
            from,
            to,
            implicit_segments: Vec::new(),
            span: None,
        });
        Ok(id)
    }

    pub fn add_flow_path(&mut self, from: &str, to: &str) -> Result<ElementId, ModelError> {
        let from = self.resolve_stage(from).ok_or_else(|| ModelError::UnknownEndpoint(from.to_string()))?;
        let to = self.resolve_stage(to).ok_or_else(|| ModelError::UnknownEndpoint(to.to_string()))?;
        self.add_flow(from, to)
    }

    /// Appends a trigger edge; duplicates collapse like flows do.
    /// Self-triggers are structurally allowed.
    pub fn add_trigger(&mut self, from: ElementId, to: ElementId) -> Result<ElementId, ModelError> {
        self.check_stage(from)?;
        self.check_stage(to)?;
        if let Some(existing) = self.find_trigger(from, to) {
            return Ok(existing);
        }
        let id = self.fresh_id();
        self.triggers.push(TriggerEdge { id, from, to, span: None });
        Ok(id)
    }

    pub fn add_trigger_path(&mut self, from: &str, to: &str) -> Result<ElementId, ModelError> {
        let from = self.resolve_stage(from).ok_or_else(|| ModelError::UnknownEndpoint(from.to_string()))?;
        let to = self.resolve_stage(to).ok_or_else(|| ModelError::UnknownEndpoint(to.to_string()))?;
        self.add_trigger(from, to)
    }

    fn check_stage(&self, id: ElementId) -> Result<(), ModelError> {
        if self.stages.contains_key(&id) {
            Ok(())
        } else {
            Err(ModelError::UnknownEndpoint(id.to_string()))
        }
    }

    pub fn set_span(&mut self, id: ElementId, span: SourceSpan) {
        if let Some(t) = self.thimacs.get_mut(&id) {
            t.span = Some(span);
        } else if let Some(s) = self.stages.get_mut(&id) {
            s.span = Some(span);
        } else if let Some(f) = self.flows.iter_mut().find(|f| f.id == id) {
            f.span = Some(span);
        } else if let Some(t) = self.triggers.iter_mut().find(|t| t.id == id) {
            t.span = Some(span);
        }
    }

    /// Sets the step-number annotation of a thimac or stage.
    pub fn set_annotation(&mut self, id: ElementId, annotation: Option<u32>) {
        if let Some(t) = self.thimacs.get_mut(&id) {
            t.annotation = annotation;
        } else if let Some(s) = self.stages.get_mut(&id) {
            s.annotation = annotation;
        }
    }

    pub fn roots(&self) -> &[ElementId] {
        &self.roots
    }

    pub fn thimac(&self, id: ElementId) -> Option<&Thimac> {
        self.thimacs.get(&id)
    }

    pub fn stage(&self, id: ElementId) -> Option<&Stage> {
        self.stages.get(&id)
    }

    pub fn flow(&self, id: ElementId) -> Option<&FlowEdge> {
        self.flows.iter().find(|f| f.id == id)
    }

    pub fn trigger(&self, id: ElementId) -> Option<&TriggerEdge> {
        self.triggers.iter().find(|t| t.id == id)
    }

    /// Thimacs in declaration order.
    pub fn thimacs(&self) -> impl Iterator<Item = &Thimac> {
        self.thimacs.values()
    }

    /// Stages in declaration order.
    pub fn stages(&self) -> impl Iterator<Item = &Stage> {
        self.stages.values()
    }

    pub fn flows(&self) -> &[FlowEdge] {
        &self.flows
    }

    pub fn triggers(&self) -> &[TriggerEdge] {
        &self.triggers
    }

    pub fn is_empty(&self) -> bool {
        self.thimacs.is_empty()
    }

    /// Number of elements of every kind.
    pub fn element_count(&self) -> usize {
        self.thimacs.len() + self.stages.len() + self.flows.len() + self.triggers.len()
    }

    pub fn element_kind(&self, id: ElementId) -> Option<ElementKind> {
        if self.thimacs.contains_key(&id) {
            Some(ElementKind::Thimac)
        } else if self.stages.contains_key(&id) {
            Some(ElementKind::Stage)
        } else if self.flows.iter().any(|f| f.id == id) {
            Some(ElementKind::Flow)
        } else if self.triggers.iter().any(|t| t.id == id) {
            Some(ElementKind::Trigger)
        } else {
            None
        }
    }

    pub fn contains(&self, id: ElementId) -> bool {
        self.element_kind(id).is_some()
    }

    pub fn span(&self, id: ElementId) -> Option<&SourceSpan> {
        match self.element_kind(id)? {
            ElementKind::Thimac => self.thimacs[&id].span.as_ref(),
            ElementKind::Stage => self.stages[&id].span.as_ref(),
            ElementKind::Flow => self.flow(id)?.span.as_ref(),
            ElementKind::Trigger => self.trigger(id)?.span.as_ref(),
        }
    }

    pub fn find_flow(&self, from: ElementId, to: ElementId) -> Option<ElementId> {
        self.flows.iter().find(|f| f.from == from && f.to == to).map(|f| f.id)
    }

    pub fn find_trigger(&self, from: ElementId, to: ElementId) -> Option<ElementId> {
        self.triggers.iter().find(|t| t.from == from && t.to == to).map(|t| t.id)
    }

    /// Owning thimac of a stage.
    pub fn owner(&self, stage: ElementId) -> Option<ElementId> {
        self.stages.get(&stage).map(|s| s.owner)
    }

    /// True when both stages belong to the same thimac.
    pub fn same_machine(&self, a: ElementId, b: ElementId) -> bool {
        matches!((self.owner(a), self.owner(b)), (Some(x), Some(y)) if x == y)
    }

    pub fn is_root(&self, thimac: ElementId) -> bool {
        self.thimacs.get(&thimac).is_some_and(|t| t.parent.is_none())
    }

    /// Resolves a dotted thimac path such as `ATM.card`.
    pub fn resolve_thimac(&self, path: &str) -> Option<ElementId> {
        let mut level = &self.roots;
        let mut found = None;
        for segment in path.split('.') {
            let id = *level.iter().find(|id| self.thimacs[id].name == segment)?;
            level = &self.thimacs[&id].children;
            found = Some(id);
        }
        found
    }

    /// Resolves a stage path. A path ending in a stage keyword names that
    /// stage; a path ending at a thimac names its transfer stage.
    pub fn resolve_stage(&self, path: &str) -> Option<ElementId> {
        let (head, last) = match path.rsplit_once('.') {
            Some((head, last)) => (head, last),
            None => ("", path),
        };
        match StageKind::from_keyword(last) {
            Some(kind) if !head.is_empty() => self.thimacs[&self.resolve_thimac(head)?].stage(kind),
            Some(_) => None,
            None => self.thimacs[&self.resolve_thimac(path)?].stage(StageKind::Transfer),
        }
    }

    /// Dotted path name of any element. Stages end in their kind keyword;
    /// edges are rendered as `from->to` (flows) or `from~>to` (triggers).
    pub fn qualified_name(&self, id: ElementId) -> String {
        if let Some(t) = self.thimacs.get(&id) {
            match t.parent {
                Some(p) => format!("{}.{}", self.qualified_name(p), t.name),
                None => t.name.clone(),
            }
        } else if let Some(s) = self.stages.get(&id) {
            format!("{}.{}", self.qualified_name(s.owner), s.kind)
        } else if let Some(f) = self.flow(id) {
            format!("{}->{}", self.qualified_name(f.from), self.qualified_name(f.to))
        } else if let Some(t) = self.trigger(id) {
            format!("{}~>{}", self.qualified_name(t.from), self.qualified_name(t.to))
        } else {
            id.to_string()
        }
    }

    /// Depth-first thimac order: each root followed by its descendants.
    pub fn thimacs_preorder(&self) -> Vec<ElementId> {
        fn walk(model: &Model, id: ElementId, out: &mut Vec<ElementId>) {
            out.push(id);
            for &c in &model.thimacs[&id].children {
                walk(model, c, out);
            }
        }
        let mut out = Vec::with_capacity(self.thimacs.len());
        for &r in &self.roots {
            walk(self, r, &mut out);
        }
        out
    }

    /// Replaces the flow at `index` by `replacement`, reusing edges that
    /// already exist. Returns the standing edge ids and how many were added.
    pub(crate) fn replace_flow(
        &mut self,
        index: usize,
        replacement: Vec<(ElementId, ElementId)>,
        inserted: &[ElementId],
    ) -> (Vec<ElementId>, usize) {
        let original = self.flows.remove(index);
        let mut ids = Vec::new();
        let mut at = index;
        for (from, to) in replacement {
            if let Some(existing) = self.find_flow(from, to) {
                ids.push(existing);
                continue;
            }
            let id = self.fresh_id();
            self.flows.insert(
                at,
                FlowEdge {
                    id,
                    from,
                    to,
                    implicit_segments: inserted.to_vec(),
                    span: original.span.clone(),
                },
            );
            at += 1;
            ids.push(id);
        }
        (ids, at - index)
    }
}

/// Canonical, id-free description of a model used for structural equality.
#[derive(Debug, PartialEq, Eq)]
struct Signature {
    thimacs: BTreeSet<String>,
    stages: BTreeSet<String>,
    flows: BTreeSet<(String, String)>,
    triggers: BTreeSet<(String, String)>,
}

impl Signature {
    fn of(model: &Model) -> Signature {
        let name = |id| model.qualified_name(id);
        Signature {
            thimacs: model.thimacs().map(|t| name(t.id)).collect(),
            stages: model.stages().map(|s| name(s.id)).collect(),
            flows: model.flows().iter().map(|f| (name(f.from), name(f.to))).collect(),
            triggers: model.triggers().iter().map(|t| (name(t.from), name(t.to))).collect(),
        }
    }
}

/// Structural equality over qualified names. Edges match by endpoints.
/// Ids, spans and annotations play no part. Neither do implicit flags or
/// edge order.
pub fn model_equal(a: &Model, b: &Model) -> bool {
    a.thimacs.len() == b.thimacs.len()
        && a.stages.len() == b.stages.len()
        && a.flows.len() == b.flows.len()
        && a.triggers.len() == b.triggers.len()
        && Signature::of(a) == Signature::of(b)
}
