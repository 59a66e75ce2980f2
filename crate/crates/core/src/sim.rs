//! Deterministic token-flow execution of a chronology.
//!
//! Tokens stand for things. Each chronology node runs its event's
//! (flattened) region as many times as the event recurs. Within one
//! instance a single FIFO queue drives everything:
//!
//! * Empty create stages with no in-region inbound flow that no trigger
//!   targets spawn a token, as do empty system-boundary transfers.
//! * Tokens left at region stages by earlier instances are adopted.
//! * A token arriving at a trigger source fires the stage, queueing its
//!   triggers. A trigger on a create stage spawns a new thing; on any other
//!   stage it enables a token waiting there, or leaves a credit.
//! * A token moves along its in-region outgoing flows. At a transfer it only
//!   crosses to another machine when it came from its own machine, and vice
//!   versa. More than one allowed flow replicates the token.
//! * When the queue empties, every unused credit spawns a token at its stage.
//!
//! Tokens are never destroyed; they rest where they stop and stay pooled
//! for later events.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::behavior::{self, Chronology, EventDef, TimeStamp};
use crate::model::{ElementId, Model, StageKind};
use crate::normalize::is_normalized;
use crate::validate::{has_errors, validate};

pub const DEFAULT_MAX_STEPS_PER_EVENT: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheduler {
    #[default]
    DeclarationOrderFifo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    /// Firings allowed per event instance before the run is abandoned.
    pub max_steps_per_event: u64,
    pub scheduler: Scheduler,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            max_steps_per_event: DEFAULT_MAX_STEPS_PER_EVENT,
            scheduler: Scheduler::DeclarationOrderFifo,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("event {event} instance {instance} did not reach quiescence within {budget} steps")]
    StepBudgetExceeded { event: String, instance: u32, budget: u64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: u64,
    /// Qualified name of the thimac whose stage spawned the token.
    pub thing: String,
    pub location: ElementId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FiringKind {
    StageFire,
    FlowMove,
    TriggerFire,
    TokenSpawn,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing {
    pub step: u64,
    pub event: String,
    /// 1-based occurrence number within the chronology node.
    pub instance: u32,
    pub element: ElementId,
    pub kind: FiringKind,
    pub token: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventInstance {
    pub event: String,
    pub instance: u32,
    pub tick: TimeStamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub firings: Vec<Firing>,
    pub event_order: Vec<EventInstance>,
    pub final_tokens: Vec<Token>,
    /// Non-fatal observations such as token broadcast. Not serialized.
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct TraceDoc<'a> {
    event_order: Vec<OrderDoc<'a>>,
    firings: Vec<FiringDoc<'a>>,
    final_tokens: Vec<TokenDoc<'a>>,
}

#[derive(Serialize)]
struct OrderDoc<'a> {
    event: &'a str,
    instance: u32,
    tick: TimeStamp,
}

#[derive(Serialize)]
struct FiringDoc<'a> {
    step: u64,
    event: &'a str,
    instance: u32,
    element: String,
    kind: FiringKind,
    token: Option<u64>,
}

#[derive(Serialize)]
struct TokenDoc<'a> {
    id: u64,
    thing: &'a str,
    location: String,
}

impl Trace {
    /// Serializes with elements by qualified name. Key order is fixed, so
    /// equal traces give identical bytes.
    pub fn to_json(&self, model: &Model) -> String {
        let doc = TraceDoc {
            event_order: self
                .event_order
                .iter()
                .map(|o| OrderDoc {
                    event: &o.event,
                    instance: o.instance,
                    tick: o.tick,
                })
                .collect(),
            firings: self
                .firings
                .iter()
                .map(|f| FiringDoc {
                    step: f.step,
                    event: &f.event,
                    instance: f.instance,
                    element: model.qualified_name(f.element),
                    kind: f.kind,
                    token: f.token,
                })
                .collect(),
            final_tokens: self
                .final_tokens
                .iter()
                .map(|t| TokenDoc {
                    id: t.id,
                    thing: &t.thing,
                    location: model.qualified_name(t.location),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("trace serializes")
    }

    pub fn spawn_count(&self) -> usize {
        self.firings.iter().filter(|f| f.kind == FiringKind::TokenSpawn).count()
    }

    /// Firings that involve `token`, in step order.
    pub fn token_history(&self, token: u64) -> impl Iterator<Item = &Firing> {
        self.firings.iter().filter(move |f| f.token == Some(token))
    }
}

/// Per-instance view of one region.
struct Region {
    stages: BTreeSet<ElementId>,
    out_flows: BTreeMap<ElementId, Vec<(ElementId, ElementId)>>,
    triggers_from: BTreeMap<ElementId, Vec<(ElementId, ElementId)>>,
    has_inflow: BTreeSet<ElementId>,
    gated: BTreeSet<ElementId>,
}

impl Region {
    fn new(model: &Model, members: &BTreeSet<ElementId>) -> Region {
        let stages: BTreeSet<ElementId> = members.iter().copied().filter(|&e| model.stage(e).is_some()).collect();
        let mut out_flows: BTreeMap<ElementId, Vec<_>> = BTreeMap::new();
        let mut has_inflow = BTreeSet::new();
        for f in model.flows().iter().filter(|f| members.contains(&f.id)) {
            out_flows.entry(f.from).or_default().push((f.id, f.to));
            has_inflow.insert(f.to);
        }
        let mut triggers_from: BTreeMap<ElementId, Vec<_>> = BTreeMap::new();
        let mut gated = BTreeSet::new();
        for t in model.triggers().iter().filter(|t| members.contains(&t.id)) {
            triggers_from.entry(t.from).or_default().push((t.id, t.to));
            if model.stage(t.to).unwrap().kind != StageKind::Create {
                gated.insert(t.to);
            }
        }
        Region {
            stages,
            out_flows,
            triggers_from,
            has_inflow,
            gated,
        }
    }

    /// Stages where a resting token could do something when adopted.
    fn adopts_at(&self, stage: ElementId) -> bool {
        self.out_flows.contains_key(&stage) || self.triggers_from.contains_key(&stage) || self.gated.contains(&stage)
    }
}

enum Action {
    Move(u64),
    Fire(ElementId, ElementId),
}

struct TokenState {
    token: Token,
    /// At a transfer: arrived from another machine, or spawned there.
    inbound: bool,
}

struct Sim<'m> {
    model: &'m Model,
    config: SimConfig,
    tokens: Vec<TokenState>,
    at: BTreeMap<ElementId, BTreeSet<u64>>,
    /// Stages whose owner is a root and that no flow enters.
    boundary: BTreeSet<ElementId>,
    /// Targets of any trigger in the model.
    triggered: BTreeSet<ElementId>,
    trace: Trace,
    step: u64,
}

struct Instance<'r> {
    event: String,
    number: u32,
    region: &'r Region,
    queue: VecDeque<Action>,
    waiting: BTreeMap<ElementId, VecDeque<u64>>,
    credits: BTreeMap<ElementId, u32>,
    budget_used: u64,
}

impl<'m> Sim<'m> {
    fn emit(&mut self, inst: &mut Instance, element: ElementId, kind: FiringKind, token: Option<u64>) -> Result<(), SimError> {
        inst.budget_used += 1;
        if inst.budget_used > self.config.max_steps_per_event {
            return Err(SimError::StepBudgetExceeded {
                event: inst.event.clone(),
                instance: inst.number,
                budget: self.config.max_steps_per_event,
            });
        }
        self.trace.firings.push(Firing {
            step: self.step,
            event: inst.event.clone(),
            instance: inst.number,
            element,
            kind,
            token,
        });
        self.step += 1;
        Ok(())
    }

    fn spawn(&mut self, inst: &mut Instance, stage: ElementId, thing: String) -> Result<u64, SimError> {
        let id = self.tokens.len() as u64;
        self.tokens.push(TokenState {
            token: Token {
                id,
                thing,
                location: stage,
            },
            inbound: true,
        });
        self.at.entry(stage).or_default().insert(id);
        self.emit(inst, stage, FiringKind::TokenSpawn, Some(id))?;
        Ok(id)
    }

    fn spawn_fresh(&mut self, inst: &mut Instance, stage: ElementId) -> Result<u64, SimError> {
        let owner = self.model.owner(stage).expect("stage has an owner");
        let thing = self.model.qualified_name(owner);
        self.spawn(inst, stage, thing)
    }

    fn relocate(&mut self, token: u64, to: ElementId, inbound: bool) {
        let state = &mut self.tokens[token as usize];
        let from = state.token.location;
        state.token.location = to;
        state.inbound = inbound;
        if let Some(set) = self.at.get_mut(&from) {
            set.remove(&token);
        }
        self.at.entry(to).or_default().insert(token);
    }

    fn arrive(&mut self, inst: &mut Instance, token: u64) -> Result<(), SimError> {
        let stage = self.tokens[token as usize].token.location;
        if inst.region.gated.contains(&stage) {
            match inst.credits.get_mut(&stage) {
                Some(c) if *c > 0 => *c -= 1,
                _ => {
                    inst.waiting.entry(stage).or_default().push_back(token);
                    return Ok(());
                }
            }
        }
        self.proceed(inst, token)
    }

    /// The token passes its stage: the stage fires and the token may move on.
    fn proceed(&mut self, inst: &mut Instance, token: u64) -> Result<(), SimError> {
        let stage = self.tokens[token as usize].token.location;
        if let Some(triggers) = inst.region.triggers_from.get(&stage) {
            let triggers = triggers.clone();
            self.emit(inst, stage, FiringKind::StageFire, Some(token))?;
            inst.queue.extend(triggers.into_iter().map(|(t, to)| Action::Fire(t, to)));
        }
        inst.queue.push_back(Action::Move(token));
        Ok(())
    }

    fn fire(&mut self, inst: &mut Instance, trigger: ElementId, target: ElementId) -> Result<(), SimError> {
        if self.model.stage(target).unwrap().kind == StageKind::Create {
            self.emit(inst, trigger, FiringKind::TriggerFire, None)?;
            let token = self.spawn_fresh(inst, target)?;
            return self.arrive(inst, token);
        }
        let released = inst.waiting.get_mut(&target).and_then(|w| {
            let min = *w.iter().min()?;
            w.retain(|&t| t != min);
            Some(min)
        });
        match released {
            Some(token) => {
                self.emit(inst, trigger, FiringKind::TriggerFire, Some(token))?;
                self.proceed(inst, token)
            }
            None => {
                self.emit(inst, trigger, FiringKind::TriggerFire, None)?;
                *inst.credits.entry(target).or_default() += 1;
                Ok(())
            }
        }
    }

    fn step_token(&mut self, inst: &mut Instance, token: u64) -> Result<(), SimError> {
        let state = &self.tokens[token as usize];
        let stage = state.token.location;
        let inbound = state.inbound;
        let at_transfer = self.model.stage(stage).unwrap().kind == StageKind::Transfer;
        let allowed: Vec<(ElementId, ElementId)> = inst
            .region
            .out_flows
            .get(&stage)
            .into_iter()
            .flatten()
            .copied()
            .filter(|&(_, to)| !at_transfer || self.model.same_machine(stage, to) == inbound)
            .collect();
        if allowed.len() > 1 {
            self.trace.warnings.push(format!(
                "{} instance {}: token {token} broadcast from {} along {} flows",
                inst.event,
                inst.number,
                self.model.qualified_name(stage),
                allowed.len()
            ));
        }
        for (i, &(flow, to)) in allowed.iter().enumerate() {
            let mover = if i == 0 {
                token
            } else {
                let thing = self.tokens[token as usize].token.thing.clone();
                let copy = self.spawn(inst, stage, thing)?;
                self.tokens[copy as usize].inbound = inbound;
                copy
            };
            let cross = !self.model.same_machine(stage, to);
            self.relocate(mover, to, cross);
            self.emit(inst, flow, FiringKind::FlowMove, Some(mover))?;
            self.arrive(inst, mover)?;
        }
        Ok(())
    }

    fn run_instance(&mut self, event: &str, number: u32, region: &Region) -> Result<(), SimError> {
        let mut inst = Instance {
            event: event.to_string(),
            number,
            region,
            queue: VecDeque::new(),
            waiting: BTreeMap::new(),
            credits: BTreeMap::new(),
            budget_used: 0,
        };
        let mut starts = Vec::new();
        for &s in &region.stages {
            let kind = self.model.stage(s).unwrap().kind;
            let empty = self.at.get(&s).is_none_or(BTreeSet::is_empty);
            let origin = kind == StageKind::Create && !region.has_inflow.contains(&s) && !self.triggered.contains(&s);
            if empty && (origin || self.boundary.contains(&s)) {
                starts.push(s);
            }
        }
        let mut adopted: Vec<u64> = region
            .stages
            .iter()
            .filter(|&&s| region.adopts_at(s))
            .flat_map(|s| self.at.get(s).into_iter().flatten().copied())
            .collect();
        adopted.sort_unstable();
        for s in starts {
            let token = self.spawn_fresh(&mut inst, s)?;
            self.arrive(&mut inst, token)?;
        }
        for token in adopted {
            self.arrive(&mut inst, token)?;
        }
        loop {
            while let Some(action) = inst.queue.pop_front() {
                match action {
                    Action::Move(token) => self.step_token(&mut inst, token)?,
                    Action::Fire(trigger, target) => self.fire(&mut inst, trigger, target)?,
                }
            }
            let leftover: Vec<(ElementId, u32)> =
                inst.credits.iter().filter(|(_, &n)| n > 0).map(|(&s, &n)| (s, n)).collect();
            if leftover.is_empty() {
                return Ok(());
            }
            inst.credits.clear();
            for (stage, n) in leftover {
                for _ in 0..n {
                    let token = self.spawn_fresh(&mut inst, stage)?;
                    self.proceed(&mut inst, token)?;
                }
            }
        }
    }
}

/// Runs every chronology node in schedule order, each as many times as its
/// event recurs.
pub fn simulate(model: &Model, events: &[EventDef], chronology: &Chronology, config: SimConfig) -> Result<Trace, SimError> {
    if config.max_steps_per_event == 0 {
        return Err(SimError::PreconditionViolated("maxStepsPerEvent must be at least 1".into()));
    }
    if !is_normalized(model) {
        return Err(SimError::PreconditionViolated("model is not normalized".into()));
    }
    let diags = validate(model, events, Some(chronology));
    if has_errors(&diags) {
        let first = diags.iter().find(|d| d.is_error()).unwrap();
        return Err(SimError::PreconditionViolated(format!("model does not validate: {first}")));
    }
    let order = chronology
        .schedule()
        .map_err(|e| SimError::PreconditionViolated(e.to_string()))?;

    let has_inflow: BTreeSet<ElementId> = model.flows().iter().map(|f| f.to).collect();
    let boundary = model
        .stages()
        .filter(|s| s.kind == StageKind::Transfer && model.is_root(s.owner) && !has_inflow.contains(&s.id))
        .map(|s| s.id)
        .collect();
    let mut sim = Sim {
        model,
        config,
        tokens: Vec::new(),
        at: BTreeMap::new(),
        boundary,
        triggered: model.triggers().iter().map(|t| t.to).collect(),
        trace: Trace::default(),
        step: 0,
    };
    let mut regions: BTreeMap<&str, Region> = BTreeMap::new();
    for id in &order {
        if !regions.contains_key(id.as_str()) {
            let members = behavior::flatten(events, id).map_err(|e| SimError::PreconditionViolated(e.to_string()))?;
            regions.insert(id, Region::new(model, &members));
        }
    }
    for id in &order {
        let event = events.iter().find(|e| &e.id == id).expect("flatten resolved the event");
        for n in 1..=behavior::instances(event) {
            let tick = TimeStamp(sim.trace.event_order.len() as u64);
            sim.trace.event_order.push(EventInstance {
                event: id.clone(),
                instance: n,
                tick,
            });
            sim.run_instance(id, n, &regions[id.as_str()])?;
        }
    }
    sim.trace.final_tokens = sim.tokens.into_iter().map(|s| s.token).collect();
    Ok(sim.trace)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventCoverage {
    pub event: String,
    pub fired: usize,
    pub total: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coverage {
    pub events: Vec<EventCoverage>,
    /// Qualified names of region stages no firing reached.
    pub never_fired: Vec<String>,
}

/// The stage a firing acts on, if any.
fn touched(model: &Model, f: &Firing) -> Option<ElementId> {
    match f.kind {
        FiringKind::TokenSpawn | FiringKind::StageFire => Some(f.element),
        FiringKind::FlowMove => model.flow(f.element).map(|e| e.to),
        FiringKind::TriggerFire => f.token.and(model.trigger(f.element).map(|t| t.to)),
    }
}

pub fn coverage(model: &Model, trace: &Trace, events: &[EventDef]) -> Coverage {
    let mut by_event: BTreeMap<&str, BTreeSet<ElementId>> = BTreeMap::new();
    for f in &trace.firings {
        if let Some(s) = touched(model, f) {
            by_event.entry(f.event.as_str()).or_default().insert(s);
        }
    }
    let all_fired: BTreeSet<ElementId> = by_event.values().flatten().copied().collect();
    let mut in_regions = BTreeSet::new();
    let mut per_event = Vec::new();
    for e in events {
        let stages: BTreeSet<ElementId> = behavior::flatten(events, &e.id)
            .unwrap_or_else(|_| e.region.clone())
            .into_iter()
            .filter(|&s| model.stage(s).is_some())
            .collect();
        let fired = by_event.get(e.id.as_str()).map_or(0, |f| stages.intersection(f).count());
        let total = stages.len();
        per_event.push(EventCoverage {
            event: e.id.clone(),
            fired,
            total,
            fraction: if total == 0 { 1.0 } else { fired as f64 / total as f64 },
        });
        in_regions.extend(stages);
    }
    Coverage {
        events: per_event,
        never_fired: in_regions
            .difference(&all_fired)
            .map(|&s| model.qualified_name(s))
            .collect(),
    }
}
