use tmkit::corpus;
use tmkit::pipeline::{prepare_source, Prepared};
use tmkit::sim::{coverage, simulate, FiringKind, SimConfig, Trace};

fn run(file: &str, src: &str) -> (Prepared, Trace) {
    let p = prepare_source(src, file).unwrap();
    let trace = simulate(p.model(), &p.events, p.chronology.as_ref().unwrap(), SimConfig::default()).unwrap();
    (p, trace)
}

#[test]
fn card_keeps_its_identity_through_the_atm() {
    let (p, trace) = run("atm_full.tm", corpus::ATM_FULL);
    let m = p.model();
    let spawn = trace
        .firings
        .iter()
        .find(|f| f.kind == FiringKind::TokenSpawn && m.qualified_name(f.element) == "User.card.create")
        .expect("card is created");
    assert_eq!(spawn.event, "E2");
    let card = spawn.token.unwrap();

    let visited: Vec<String> = trace
        .token_history(card)
        .filter(|f| f.kind == FiringKind::FlowMove)
        .map(|f| m.qualified_name(m.flow(f.element).unwrap().to))
        .collect();
    assert_eq!(visited.first().map(String::as_str), Some("User.card.release"));
    assert!(visited.contains(&"ATM.card.process".to_string()));
    assert_eq!(visited.last().map(String::as_str), Some("User.card.receive"));

    let fin = trace.final_tokens.iter().find(|t| t.id == card).unwrap();
    assert_eq!(fin.thing, "User.card");
    assert_eq!(m.qualified_name(fin.location), "User.card.receive");

    let events: Vec<&str> = trace.token_history(card).map(|f| f.event.as_str()).collect();
    assert_eq!(events.first(), Some(&"E2"));
    assert_eq!(events.last(), Some(&"E15"));
}

#[test]
fn atm_runs_every_stage() {
    let (p, trace) = run("atm_full.tm", corpus::ATM_FULL);
    let order: Vec<&str> = trace.event_order.iter().map(|o| o.event.as_str()).collect();
    let expected: Vec<String> = (1..=15).map(|i| format!("E{i}")).collect();
    assert_eq!(order, expected);
    let report = coverage(p.model(), &trace, &p.events);
    assert!(report.never_fired.is_empty(), "{:?}", report.never_fired);
    assert!(trace.warnings.is_empty(), "{:?}", trace.warnings);
}

#[test]
fn triggers_release_waiting_tokens() {
    let (p, trace) = run("atm_full.tm", corpus::ATM_FULL);
    let m = p.model();
    let fired: Vec<String> = trace
        .firings
        .iter()
        .filter(|f| f.kind == FiringKind::TriggerFire)
        .map(|f| {
            let t = m.trigger(f.element).unwrap();
            format!("{}~>{}", m.qualified_name(t.from), m.qualified_name(t.to))
        })
        .collect();
    assert_eq!(fired.len(), m.triggers().len());
    assert!(fired.contains(&"ATM.ok.process~>ATM.card.release".to_string()));
    let release = trace
        .firings
        .iter()
        .find(|f| f.kind == FiringKind::TriggerFire && m.qualified_name(m.trigger(f.element).unwrap().to) == "ATM.card.release")
        .unwrap();
    assert_eq!(release.event, "E15");
    assert!(release.token.is_some(), "the waiting card is released");
}

#[test]
fn recurring_events_repeat_their_structure() {
    let (_, trace) = run("ships.tm", corpus::SHIPS);
    assert_eq!(trace.event_order.len(), 4000);
    assert_eq!(trace.spawn_count(), 4000);
    let per_instance = trace.firings.len() / 4000;
    assert_eq!(trace.firings.len() % 4000, 0);
    let first: Vec<_> = trace.firings[..per_instance].iter().map(|f| (f.element, f.kind)).collect();
    let last: Vec<_> = trace.firings[trace.firings.len() - per_instance..].iter().map(|f| (f.element, f.kind)).collect();
    assert_eq!(first, last);
}

#[test]
fn davidson_follows_its_partial_order() {
    let (_, trace) = run("davidson.tm", corpus::DAVIDSON);
    let order: Vec<&str> = trace.event_order.iter().map(|o| o.event.as_str()).collect();
    assert_eq!(order, ["E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8"]);
}

#[test]
fn trace_json_shape() {
    let (p, trace) = run("mud.tm", corpus::MUD);
    let json: serde_json::Value = serde_json::from_str(&trace.to_json(p.model())).unwrap();
    let keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["eventOrder", "finalTokens", "firings"]);
    assert_eq!(json["eventOrder"][1]["event"], "Tonight");
    let kinds: Vec<&str> = json["firings"].as_array().unwrap().iter().map(|f| f["kind"].as_str().unwrap()).collect();
    assert!(kinds.contains(&"TokenSpawn") && kinds.contains(&"FlowMove"));
}
