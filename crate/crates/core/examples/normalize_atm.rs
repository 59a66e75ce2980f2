//! Expands the simplified ATM diagram into its full form.

use tmkit::normalize::normalize_with_report;
use tmkit::{corpus, model_equal, parse};

pub fn run_example() {
    let simplified = parse(corpus::ATM_SIMPLIFIED, "atm_simplified.tm").model.unwrap();
    let full = parse(corpus::ATM_FULL, "atm_full.tm").model.unwrap();
    let report = normalize_with_report(&simplified);
    println!(
        "{} elided flows expanded, {} stages inserted",
        report.expansions.len(),
        report.inserted_stage_count()
    );
    for e in report.expansions.iter().take(3) {
        let chain: Vec<String> = e.chain.iter().map(|&s| report.model.qualified_name(s)).collect();
        println!("  {}", chain.join(" -> "));
    }
    assert!(!model_equal(&simplified, &full));
    assert!(model_equal(&report.model, &full));
    println!("normalized model equals the full ATM model");
}

fn main() {
    run_example();
}
