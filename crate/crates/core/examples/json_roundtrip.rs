//! Exports a model to JSON and reads it back.

use tmkit::dsl::{format, from_json, to_json, to_json_compact};
use tmkit::{corpus, model_equal, parse};

pub fn run_example() {
    let parsed = parse(corpus::CAESAR_EVENT, "caesar_event.tm");
    let json = to_json(&parsed);
    println!("{json}");
    let back = from_json(&json);
    assert!(model_equal(parsed.model.as_ref().unwrap(), back.model.as_ref().unwrap()));
    assert_eq!(to_json_compact(&back), to_json_compact(&parsed));
    println!("--- as DSL ---\n{}", format(&back));
}

fn main() {
    run_example();
}
