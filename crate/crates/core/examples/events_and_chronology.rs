//! Events as regions of the static model, ordered by a chronology.

use tmkit::behavior::{chronology_depths, flatten, topological_orders_contains};
use tmkit::{corpus, parse};

pub fn run_example() {
    let parsed = parse(corpus::DAVIDSON, "davidson.tm");
    let model = parsed.model.as_ref().unwrap();
    for e in &parsed.events {
        let stages: Vec<String> = e.region_stages(model).map(|s| model.qualified_name(s)).collect();
        println!("{} {:?}: {}", e.id, e.label.as_deref().unwrap_or(""), stages.join(", "));
    }
    let chronology = parsed.chronology.as_ref().unwrap();
    let order = chronology.schedule().unwrap();
    println!("schedule: {}", order.join(" "));
    for (event, depth) in chronology_depths(chronology) {
        println!("  depth {depth}: {event}");
    }
    let swapped = ["E1", "E2", "E4", "E3", "E5", "E6", "E7", "E8"];
    println!("E4 before E3 allowed: {}", topological_orders_contains(chronology, &swapped).unwrap());

    let mud = parse(corpus::MUD, "mud.tm");
    let tonight = flatten(&mud.events, "Tonight").unwrap();
    println!("Tonight covers {} elements through its Drop subevent", tonight.len());
}

fn main() {
    run_example();
}
