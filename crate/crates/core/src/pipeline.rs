//! Source text to a normalized, validated model.

use crate::behavior::{remap_regions, Chronology, EventDef};
use crate::dsl::{self, ParseResult};
use crate::model::Model;
use crate::normalize::{normalize_with_report, Normalization};
use crate::validate::{has_errors, sort_diagnostics, validate_with, Diagnostic, ValidateOptions};

#[derive(Debug, Clone)]
pub struct Prepared {
    pub normalization: Normalization,
    /// Event regions carried over to the normalized model.
    pub events: Vec<EventDef>,
    pub chronology: Option<Chronology>,
    /// Parse warnings followed by validation findings, sorted.
    pub diagnostics: Vec<Diagnostic>,
}

impl Prepared {
    pub fn model(&self) -> &Model {
        &self.normalization.model
    }

    pub fn has_errors(&self) -> bool {
        has_errors(&self.diagnostics)
    }

    /// The normalized model with its behavior, ready for formatting or export.
    pub fn to_parse_result(&self) -> ParseResult {
        ParseResult {
            model: Some(self.model().clone()),
            events: self.events.clone(),
            chronology: self.chronology.clone(),
            diagnostics: Vec::new(),
        }
    }
}

/// Parses DSL text, or a JSON document when `file` ends in `.json` or the
/// text opens with `{`.
pub fn load(text: &str, file: &str) -> ParseResult {
    if file.ends_with(".json") || text.trim_start().starts_with('{') {
        dsl::from_json(text)
    } else {
        dsl::parse(text, file)
    }
}

/// Normalizes and validates a parse result. Returns the parse diagnostics
/// unchanged when parsing failed.
pub fn prepare(result: ParseResult, options: ValidateOptions) -> Result<Prepared, Vec<Diagnostic>> {
    let Some(model) = result.model else {
        return Err(result.diagnostics);
    };
    let normalization = normalize_with_report(&model);
    let events = remap_regions(&result.events, &normalization);
    let mut diagnostics = result.diagnostics;
    diagnostics.extend(validate_with(
        &normalization.model,
        &events,
        result.chronology.as_ref(),
        options,
    ));
    sort_diagnostics(&mut diagnostics);
    Ok(Prepared {
        normalization,
        events,
        chronology: result.chronology,
        diagnostics,
    })
}

pub fn prepare_source(text: &str, file: &str) -> Result<Prepared, Vec<Diagnostic>> {
    prepare(load(text, file), ValidateOptions::default())
}
