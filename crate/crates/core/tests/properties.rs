mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use tmkit::behavior::{flatten, remap_regions, Chronology};
use tmkit::normalize::normalize_with_report;
use tmkit::sim::{simulate, FiringKind, SimConfig, SimError};
use tmkit::validate::{has_errors, RuleCode};
use tmkit::{is_normalized, model_equal, normalize, validate, Model, StageKind};

const STAGES: usize = 12;

fn model(seed: u64) -> Model {
    common::random_model(&mut common::rng(seed), STAGES)
}

fn stage_names(m: &Model) -> BTreeSet<String> {
    m.stages().map(|s| m.qualified_name(s.id)).collect()
}

/// Flows and triggers as a digraph over qualified stage names.
fn wiring(m: &Model) -> Chronology {
    let mut g = Chronology::default();
    for s in m.stages() {
        g.add_node(&m.qualified_name(s.id));
    }
    let edges = m.flows().iter().map(|f| (f.from, f.to)).chain(m.triggers().iter().map(|t| (t.from, t.to)));
    for (a, b) in edges {
        g.add_edge(&m.qualified_name(a), &m.qualified_name(b));
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn normalization_is_idempotent(seed in any::<u64>()) {
        let once = normalize_with_report(&model(seed)).model;
        let twice = normalize_with_report(&once);
        prop_assert!(twice.expansions.is_empty());
        prop_assert!(model_equal(&once, &twice.model));
    }

    #[test]
    fn model_equal_is_an_equivalence(a in any::<u64>(), b in any::<u64>()) {
        let (ma, mb) = (model(a), model(b));
        prop_assert!(model_equal(&ma, &ma.clone()));
        prop_assert_eq!(model_equal(&ma, &mb), model_equal(&mb, &ma));
    }

    #[test]
    fn normalization_changes_exactly_the_unnormalized(seed in any::<u64>()) {
        let m = model(seed);
        if let Ok(n) = normalize(&m) {
            prop_assert_eq!(model_equal(&m, &n), is_normalized(&m));
            prop_assert!(is_normalized(&n));
        }
    }

    #[test]
    fn normalization_keeps_source_stages_and_one_per_kind(seed in any::<u64>()) {
        let m = model(seed);
        let n = normalize_with_report(&m).model;
        prop_assert!(stage_names(&m).is_subset(&stage_names(&n)));
        for t in n.thimacs() {
            let kinds: Vec<StageKind> = t.stages().map(|(k, _)| k).collect();
            let distinct: BTreeSet<_> = kinds.iter().collect();
            prop_assert_eq!(kinds.len(), distinct.len());
        }
        for s in n.stages() {
            prop_assert_eq!(n.thimac(s.owner).unwrap().stage(s.kind), Some(s.id));
        }
    }

    #[test]
    fn expansions_are_legal(seed in any::<u64>()) {
        let report = normalize_with_report(&model(seed));
        let produced: BTreeSet<_> = report.expansions.iter().flat_map(|e| e.edges.iter().copied()).collect();
        let flagged: Vec<_> = validate(&report.model, &[], None)
            .into_iter()
            .filter(|d| d.code == RuleCode::FlowIllegal)
            .filter_map(|d| d.element)
            .filter(|e| produced.contains(e))
            .collect();
        prop_assert!(flagged.is_empty(), "flagged expansion edges {:?}", flagged);
        let left: BTreeSet<_> = report.unexpandable.iter().map(|&e| report.model.flow(e).map(|f| (f.from, f.to))).collect();
        prop_assert!(left.iter().all(Option::is_some));
    }

}

proptest! {
    #![proptest_config(ProptestConfig { max_global_rejects: 20_000, ..ProptestConfig::with_cases(256) })]

    #[test]
    fn simulation_invariants(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let raw = if seed % 2 == 0 { common::random_pipeline(&mut rng) } else { common::random_model(&mut rng, STAGES) };
        let report = normalize_with_report(&raw);
        prop_assume!(report.unexpandable.is_empty());
        let (events, chrono) = common::random_behavior(&mut rng, &raw);
        prop_assume!(chrono.is_some());
        let chrono = chrono.unwrap();
        let events = remap_regions(&events, &report);
        prop_assume!(!has_errors(&validate(&report.model, &events, Some(&chrono))));
        let config = SimConfig { max_steps_per_event: 500, ..SimConfig::default() };
        let trace = match simulate(&report.model, &events, &chrono, config) {
            Ok(t) => t,
            Err(SimError::StepBudgetExceeded { .. }) => {
                prop_assert!(common::dfs_has_cycle(&wiring(&report.model)), "budget exceeded on acyclic wiring");
                return Ok(());
            }
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };

        prop_assert!(trace.firings.windows(2).all(|w| w[0].step < w[1].step));

        let expected: usize = chrono.nodes.iter()
            .map(|n| events.iter().find(|e| &e.id == n).map_or(1, |e| e.multiplicity as usize))
            .sum();
        prop_assert_eq!(trace.event_order.len(), expected);
        for (i, o) in trace.event_order.iter().enumerate() {
            prop_assert_eq!(o.tick.0 as usize, i);
            let earlier = trace.event_order[..i].iter().filter(|p| p.event == o.event).count();
            prop_assert_eq!(o.instance as usize, earlier + 1);
        }

        let run: Vec<_> = trace.event_order.iter().map(|o| (o.event.as_str(), o.instance)).collect();
        let mut cursor = 0;
        for f in &trace.firings {
            while run[cursor] != (f.event.as_str(), f.instance) {
                cursor += 1;
                prop_assert!(cursor < run.len(), "firing outside the event order");
            }
            if f.kind != FiringKind::TriggerFire && f.kind != FiringKind::TokenSpawn {
                let region: BTreeSet<_> = flatten(&events, &f.event).unwrap();
                prop_assert!(region.contains(&f.element), "{:?} fired outside its region", f.kind);
            }
        }

        prop_assert_eq!(trace.final_tokens.len(), trace.spawn_count());
        let ids: BTreeSet<_> = trace.final_tokens.iter().map(|t| t.id).collect();
        prop_assert_eq!(ids.len(), trace.final_tokens.len());
        for t in &trace.final_tokens {
            prop_assert!(report.model.stage(t.location).is_some());
        }
    }
}
