//! Graphviz output in each mode. Pass a directory to write .dot files.

use tmkit::corpus;
use tmkit::pipeline::prepare_source;
use tmkit::render::{render_dot, RenderMode, RenderOptions};

pub fn run_example() {
    for (name, dot) in render_all() {
        println!("{name}: {} lines", dot.lines().count());
    }
}

fn render_all() -> Vec<(&'static str, String)> {
    let simplified = prepare_source(corpus::ATM_SIMPLIFIED, "atm_simplified.tm").unwrap();
    let full = prepare_source(corpus::ATM_FULL, "atm_full.tm").unwrap();
    let variants = [
        ("static", RenderOptions::default()),
        ("simplified", RenderOptions { simplified: true, ..RenderOptions::default() }),
        ("events", RenderOptions { mode: RenderMode::EventOverlay, ..RenderOptions::default() }),
        (
            "e7",
            RenderOptions { mode: RenderMode::EventOverlay, highlight: Some("E7".into()), ..RenderOptions::default() },
        ),
        ("chronology", RenderOptions { mode: RenderMode::Chronology, ..RenderOptions::default() }),
    ];
    variants
        .into_iter()
        .map(|(name, opts)| {
            let p = if name == "simplified" { &simplified } else { &full };
            (name, render_dot(p.model(), &p.events, p.chronology.as_ref(), &opts).unwrap())
        })
        .collect()
}

fn main() {
    match std::env::args().nth(1) {
        Some(dir) => {
            for (name, dot) in render_all() {
                let path = format!("{dir}/atm_{name}.dot");
                std::fs::write(&path, dot).unwrap();
                println!("wrote {path}");
            }
        }
        None => run_example(),
    }
}
