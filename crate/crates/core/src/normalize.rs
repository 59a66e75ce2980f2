//! Expansion of simplified models into canonical full-stage form.
//!
//! A simplified diagram elides release/transfer/receive stages and lets an
//! arrow's direction stand for the whole hand-off. Normalization puts those
//! stages back: every flow that is not in the legality matrix is replaced by
//! the chain of legal edges it abbreviates. Stages already declared on the
//! affected thimacs are reused. Create is never inserted, and transfer only
//! ever appears as the hand-off point between two machines.

use std::collections::VecDeque;

use crate::model::{ElementId, Model, ModelError, StageKind};
use crate::validate::legality;

/// Kinds that may be inserted between the endpoints of an elided
/// within-machine edge.
const INSERTABLE: [StageKind; 2] = [StageKind::Release, StageKind::Receive];

/// One elided source edge and what replaced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expansion {
    pub original: ElementId,
    /// Every stage on the expanded chain, endpoints included.
    pub chain: Vec<ElementId>,
    /// Flow edges now standing for the original edge.
    pub edges: Vec<ElementId>,
    /// Stages created for this expansion.
    pub inserted: Vec<ElementId>,
}

#[derive(Debug, Clone)]
pub struct Normalization {
    pub model: Model,
    pub expansions: Vec<Expansion>,
    /// Illegal flows for which no expansion exists; left in place.
    pub unexpandable: Vec<ElementId>,
}

impl Normalization {
    pub fn inserted_stage_count(&self) -> usize {
        self.expansions.iter().map(|e| e.inserted.len()).sum()
    }
}

/// Shortest within-machine stage sequence from `from` to `to` (both
/// included) using only legal same-machine steps and insertable
/// intermediates. `None` when there is no such path or it is not unique.
pub(crate) fn intra_path(from: StageKind, to: StageKind) -> Option<Vec<StageKind>> {
    if from == to {
        return Some(vec![from]);
    }
    // BFS counting shortest paths, capped at 2.
    let idx = |k: StageKind| StageKind::ALL.iter().position(|&x| x == k).unwrap();
    let mut dist = [usize::MAX; 5];
    let mut count = [0u8; 5];
    let mut pred: [Option<StageKind>; 5] = [None; 5];
    dist[idx(from)] = 0;
    count[idx(from)] = 1;
    let mut queue = VecDeque::from([from]);
    while let Some(cur) = queue.pop_front() {
        if cur != from && cur != to && !INSERTABLE.contains(&cur) {
            continue;
        }
        if cur == to {
            continue;
        }
        for next in StageKind::ALL {
            if !legality(cur, next, true) {
                continue;
            }
            let (c, n) = (idx(cur), idx(next));
            if dist[n] == usize::MAX {
                dist[n] = dist[c] + 1;
                count[n] = count[c];
                pred[n] = Some(cur);
                queue.push_back(next);
            } else if dist[n] == dist[c] + 1 {
                count[n] = (count[n] + count[c]).min(2);
            }
        }
    }
    if count[idx(to)] != 1 {
        return None;
    }
    let mut path = vec![to];
    let mut cur = to;
    while let Some(p) = pred[idx(cur)] {
        path.push(p);
        cur = p;
    }
    path.reverse();
    Some(path)
}

/// Stage kinds, tagged with the side they live on (`false` = source
/// machine), that an illegal flow abbreviates.
fn expansion_plan(from: StageKind, to: StageKind, same_machine: bool) -> Option<Vec<(bool, StageKind)>> {
    if same_machine {
        return Some(intra_path(from, to)?.into_iter().map(|k| (false, k)).collect());
    }
    let out = intra_path(from, StageKind::Transfer)?;
    let inbound = intra_path(StageKind::Transfer, to)?;
    Some(
        out.into_iter()
            .map(|k| (false, k))
            .chain(inbound.into_iter().map(|k| (true, k)))
            .collect(),
    )
}

/// True iff every flow edge is in the legality matrix.
pub fn is_normalized(model: &Model) -> bool {
    model.flows().iter().all(|f| {
        let (a, b) = (model.stage(f.from).unwrap(), model.stage(f.to).unwrap());
        legality(a.kind, b.kind, a.owner == b.owner)
    })
}

/// Expands every elided flow. Fails if some flow admits no expansion.
pub fn normalize(model: &Model) -> Result<Model, ModelError> {
    let report = normalize_with_report(model);
    match report.unexpandable.first() {
        Some(&edge) => Err(ModelError::AmbiguousExpansion(model.qualified_name(edge))),
        None => Ok(report.model),
    }
}

/// Like [`normalize`], but expands what it can and reports the rest.
pub fn normalize_with_report(model: &Model) -> Normalization {
    let mut out = model.clone();
    let mut expansions = Vec::new();
    let mut unexpandable = Vec::new();
    let mut i = 0;
    while i < out.flows().len() {
        let edge = out.flows()[i].clone();
        let (src, dst) = (out.stage(edge.from).unwrap().clone(), out.stage(edge.to).unwrap().clone());
        let same = src.owner == dst.owner;
        if legality(src.kind, dst.kind, same) {
            i += 1;
            continue;
        }
        let Some(plan) = expansion_plan(src.kind, dst.kind, same) else {
            unexpandable.push(edge.id);
            i += 1;
            continue;
        };
        let mut chain = Vec::with_capacity(plan.len());
        let mut inserted = Vec::new();
        for (inbound, kind) in plan {
            let owner = if inbound { dst.owner } else { src.owner };
            let existing = out.thimac(owner).unwrap().stage(kind);
            let stage = match existing {
                Some(s) => s,
                None => {
                    let s = out.insert_stage(owner, kind, true).expect("owner exists and lacks this kind");
                    inserted.push(s);
                    s
                }
            };
            chain.push(stage);
        }
        let pairs: Vec<_> = chain.windows(2).map(|w| (w[0], w[1])).collect();
        let (edges, added) = out.replace_flow(i, pairs, &inserted);
        i += added;
        expansions.push(Expansion {
            original: edge.id,
            chain,
            edges,
            inserted,
        });
    }
    Normalization {
        model: out,
        expansions,
        unexpandable,
    }
}
