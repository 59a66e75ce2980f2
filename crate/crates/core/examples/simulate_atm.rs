//! Runs the ATM scenario and follows the card.

use tmkit::corpus;
use tmkit::pipeline::prepare_source;
use tmkit::sim::{coverage, simulate, FiringKind, SimConfig};

pub fn run_example() {
    let p = prepare_source(corpus::ATM_FULL, "atm_full.tm").unwrap();
    let model = p.model();
    let trace = simulate(model, &p.events, p.chronology.as_ref().unwrap(), SimConfig::default()).unwrap();
    println!(
        "{} event instances, {} firings, {} tokens",
        trace.event_order.len(),
        trace.firings.len(),
        trace.final_tokens.len()
    );
    let card = trace.final_tokens.iter().find(|t| t.thing == "User.card").unwrap();
    for f in trace.token_history(card.id).filter(|f| f.kind == FiringKind::FlowMove) {
        let flow = model.flow(f.element).unwrap();
        println!("  [{}] card -> {}", f.event, model.qualified_name(flow.to));
    }
    for e in coverage(model, &trace, &p.events).events {
        println!("{}: {}/{} stages fired", e.event, e.fired, e.total);
    }
}

fn main() {
    run_example();
}
