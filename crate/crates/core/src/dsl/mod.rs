//! Textual syntax for thinging machine models.
//!
//! ```text
//! thimac ATM {
//!     thimac card { stage transfer; stage receive; stage process @4; }
//! }
//! flow User.card.transfer -> ATM.card.transfer -> ATM.card.receive;
//! trigger ATM.card.process ~> ATM.serial.transfer;
//! event E2 "The card is inserted" { region { ATM.card.process; } }
//! chronology { E1 -> E2; }
//! ```
//!
//! Comments are `//` and `/* */`. A path that stops at a thimac names
//! its transfer stage.

mod format;
mod json;
pub mod lexer;
mod lower;
pub mod parser;

use std::sync::Arc;

use crate::behavior::{Chronology, EventDef};
use crate::model::Model;
use crate::validate::{has_errors, sort_diagnostics, Diagnostic};

pub use format::format;
pub use json::{from_json, to_json, to_json_compact};

#[derive(Debug, Clone)]
pub struct ParseResult {
    /// Absent exactly when some diagnostic is an error.
    pub model: Option<Model>,
    pub events: Vec<EventDef>,
    pub chronology: Option<Chronology>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseResult {
    pub(crate) fn new(
        model: Model,
        events: Vec<EventDef>,
        chronology: Option<Chronology>,
        mut diagnostics: Vec<Diagnostic>,
    ) -> Self {
        sort_diagnostics(&mut diagnostics);
        let model = (!has_errors(&diagnostics)).then_some(model);
        ParseResult {
            model,
            events,
            chronology,
            diagnostics,
        }
    }

    pub(crate) fn failed(diagnostics: Vec<Diagnostic>) -> Self {
        ParseResult {
            model: None,
            events: Vec::new(),
            chronology: None,
            diagnostics,
        }
    }

    pub fn from_model(model: Model) -> Self {
        ParseResult::new(model, Vec::new(), None, Vec::new())
    }

    pub fn is_ok(&self) -> bool {
        self.model.is_some()
    }

    pub fn event(&self, id: &str) -> Option<&EventDef> {
        self.events.iter().find(|e| e.id == id)
    }
}

pub fn parse(text: &str, file: &str) -> ParseResult {
    let file: Arc<str> = Arc::from(file);
    let (tokens, mut diags) = lexer::lex(text, &file);
    let (items, parse_diags) = parser::parse_items(tokens);
    diags.extend(parse_diags);
    let lowered = lower::lower(&items);
    diags.extend(lowered.diagnostics);
    ParseResult::new(lowered.model, lowered.events, lowered.chronology, diags)
}
