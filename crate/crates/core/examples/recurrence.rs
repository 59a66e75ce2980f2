//! Repeated events: four thousand ships and two muddy nights.

use tmkit::corpus;
use tmkit::pipeline::prepare_source;
use tmkit::sim::{simulate, SimConfig};

pub fn run_example() {
    for (file, src) in [("ships.tm", corpus::SHIPS), ("mud.tm", corpus::MUD)] {
        let p = prepare_source(src, file).unwrap();
        let trace = simulate(p.model(), &p.events, p.chronology.as_ref().unwrap(), SimConfig::default()).unwrap();
        let last = trace.event_order.last().unwrap();
        println!(
            "{file}: {} instances, last is {} #{} at tick {}, {} things moved",
            trace.event_order.len(),
            last.event,
            last.instance,
            last.tick.0,
            trace.spawn_count()
        );
    }
}

fn main() {
    run_example();
}
