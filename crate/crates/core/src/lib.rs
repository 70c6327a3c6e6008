//! Building blocks for constructing a reference dataset of critical questions.
//!
//! The crate is organised along the stages of the construction workflow:
//!
//! * [`corpus`] reads argument-map files, rebuilds speaker interventions and
//!   extracts scheme-labelled arguments.
//! * [`schemes`] holds the argumentation-scheme templates and instantiates
//!   critical questions from annotated variable bindings.
//! * [`llmgen`] renders prompts, talks to a chat-completion endpoint and turns
//!   raw model output into candidate questions.
//! * [`pipeline`] folds the append-only judgment log into per-candidate state,
//!   classifies outcomes and produces reports and the final dataset.
//! * [`annotation`] is the task engine behind the annotation service.

pub mod annotation;
pub mod corpus;
pub mod exec;
pub mod jsonl;
pub mod llmgen;
pub mod pipeline;
pub mod project;
pub mod schemes;

pub use exec::Exec;
