//! Thinging machine (TM) modeling.
//!
//! A TM model is a forest of *thimacs* (things that are also machines), each
//! owning up to five stages: create, process, release, transfer and receive.
//! Things flow between stages along solid flow edges; dashed trigger edges
//! let an action in one place set off an action elsewhere. Events are
//! regions of the static model and a chronology orders them.
//!
//! ```
//! use tmkit::{dsl, normalize, validate};
//!
//! let src = "thimac ATM { stage process; } thimac Bank { stage create; stage process; }
//!            flow Bank.create -> Bank.process;
//!            flow ATM.process -> Bank.process;";
//! let parsed = dsl::parse(src, "atm.tm");
//! let model = parsed.model.unwrap();
//! let full = normalize::normalize(&model).unwrap();
//! assert_eq!(full.stages().count(), 7);
//! assert!(validate::validate(&full, &[], None).iter().all(|d| !d.is_error()));
//! ```

pub mod behavior;
pub mod cli;
pub mod corpus;
pub mod dsl;
pub mod model;
pub mod normalize;
pub mod pipeline;
pub mod render;
pub mod sim;
pub mod span;
pub mod validate;

pub use behavior::{Chronology, EventDef};
pub use dsl::{parse, ParseResult};
pub use model::{model_equal, ElementId, Model, StageKind};
pub use normalize::{is_normalized, normalize};
pub use span::SourceSpan;
pub use validate::{validate, Diagnostic, RuleCode, Severity};
