//! Prompt rendering, the chat-completion client, and the parser that turns a
//! raw model response into candidate critical questions.

mod client;
mod parse;
mod prompt;
mod run;

pub use client::{generate, generate_batch, ChatClient, EndpointConfig, API_KEY_VAR};
pub use parse::{dedup, normalize, parse_candidates, parse_items, CandidateCQ};
pub use prompt::{build_prompt, join_propositions, PromptKind, DEFINITION, QUERY};
pub use run::{Decoding, GenerationRun, RunLog, RunRequest};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed endpoint response: {0}")]
    Decode(String),
    #[error("endpoint returned an empty response")]
    Empty,
    #[error("run {run_id} failed after {attempts} attempt(s): {cause}")]
    RunFailed { run_id: String, attempts: u32, cause: Box<LlmError> },
    #[error("unknown prompt kind {0:?} (expected q or dq)")]
    PromptKind(String),
}

impl LlmError {
    /// Whether a retry could plausibly succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            LlmError::Status { status, .. } => *status == 429 || *status >= 500,
            LlmError::Transport(_) => true,
            _ => false,
        }
    }
}
