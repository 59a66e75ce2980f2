use std::fmt::Write;

use crate::model::{ElementId, Model};

use super::ParseResult;

const INDENT: &str = "    ";

fn annotation(a: Option<u32>) -> String {
    a.map(|n| format!(" @{n}")).unwrap_or_default()
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn thimac(model: &Model, id: ElementId, depth: usize, out: &mut String) {
    let t = model.thimac(id).expect("thimac in model");
    let pad = INDENT.repeat(depth);
    let _ = writeln!(out, "{pad}thimac {}{} {{", t.name, annotation(t.annotation));
    let mut stages: Vec<_> = t.stages().map(|(_, s)| model.stage(s).unwrap()).collect();
    stages.sort_by_key(|s| s.id);
    for s in stages {
        let _ = writeln!(out, "{pad}{INDENT}stage {}{};", s.kind, annotation(s.annotation));
    }
    for &c in &t.children {
        thimac(model, c, depth + 1, out);
    }
    let _ = writeln!(out, "{pad}}}");
}

/// Canonical source text. Thimacs appear in declaration order with their
/// stages in creation order; each edge is its own statement with fully
/// qualified endpoints.
pub fn format(result: &ParseResult) -> String {
    let Some(model) = &result.model else {
        return String::new();
    };
    let mut sections: Vec<String> = Vec::new();

    let mut s = String::new();
    for &r in model.roots() {
        thimac(model, r, 0, &mut s);
    }
    sections.push(s);

    let mut s = String::new();
    for f in model.flows() {
        let _ = writeln!(s, "flow {} -> {};", model.qualified_name(f.from), model.qualified_name(f.to));
    }
    sections.push(s);

    let mut s = String::new();
    for t in model.triggers() {
        let _ = writeln!(s, "trigger {} ~> {};", model.qualified_name(t.from), model.qualified_name(t.to));
    }
    sections.push(s);

    for e in &result.events {
        let mut s = String::new();
        let label = e.label.as_deref().map(|l| format!(" {}", quote(l))).unwrap_or_default();
        let _ = writeln!(s, "event {}{label} {{", e.id);
        let _ = writeln!(s, "{INDENT}region {{");
        for stage in e.region_stages(model) {
            let _ = writeln!(s, "{INDENT}{INDENT}{};", model.qualified_name(stage));
        }
        let _ = writeln!(s, "{INDENT}}}");
        if e.multiplicity != 1 {
            let _ = writeln!(s, "{INDENT}repeat {};", e.multiplicity);
        }
        if !e.subevents.is_empty() {
            let _ = writeln!(s, "{INDENT}contains {};", e.subevents.join(", "));
        }
        s.push_str("}\n");
        sections.push(s);
    }

    if let Some(c) = &result.chronology {
        let mut s = String::from("chronology {\n");
        for n in &c.nodes {
            let _ = writeln!(s, "{INDENT}{n};");
        }
        for (a, b) in &c.edges {
            let _ = writeln!(s, "{INDENT}{a} -> {b};");
        }
        s.push_str("}\n");
        sections.push(s);
    }

    sections.retain(|s| !s.is_empty());
    sections.join("\n")
}
