//! Argumentation-scheme templates and critical-question instantiation.
//!
//! Templates are data, not code: the bundled `data/schemes.jsonl` carries one
//! record per scheme and can be replaced at runtime with an edited copy
//! through [`Registry::load`].

mod postedit;
mod template;

pub use postedit::{postedit_flags, postedit_reasons, PosteditReason};
pub use template::{
    instantiate, instantiate_cqs, instantiate_cqs_with, registry, InstantiatedCQ, Pattern, Registry, SchemeTemplate,
    Segment, VariableSlot,
};

use thiserror::Error;

use crate::corpus::SchemeId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchemeError {
    #[error("unbound slots: {}", .0.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "))]
    UnboundSlot(Vec<VariableSlot>),
    #[error("argument {0} is discarded")]
    Discarded(String),
    #[error("no template for scheme {0}")]
    MissingScheme(SchemeId),
    #[error("invalid value {value:?} for slot {slot}")]
    InvalidBinding { slot: VariableSlot, value: String },
    #[error("scheme file line {line}: {message}")]
    Load { line: usize, message: String },
}
