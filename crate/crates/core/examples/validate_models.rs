//! Validates the bundled models and a broken one.

use tmkit::corpus;
use tmkit::pipeline::prepare_source;

pub fn run_example() {
    for (file, src) in corpus::VALID.iter().chain([&("broken.tm", corpus::BROKEN)]) {
        let prepared = prepare_source(src, file).expect("parses");
        let errors = prepared.diagnostics.iter().filter(|d| d.is_error()).count();
        println!("{file}: {} stages, {errors} errors", prepared.model().stages().count());
        for d in &prepared.diagnostics {
            println!("  {d}");
        }
    }
}

fn main() {
    run_example();
}
