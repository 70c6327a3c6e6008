use std::collections::HashMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{build_prompt, PromptKind};
use crate::corpus::Intervention;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for Decoding {
    fn default() -> Self {
        Decoding { temperature: 0.0, max_tokens: 512, seed: None }
    }
}

/// One prompt sent to one model, with the response exactly as received.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRun {
    /// `<intervention id>:<model>:<q|dq>:<n>`
    pub id: String,
    pub intervention_id: String,
    pub model_name: String,
    pub prompt_kind: PromptKind,
    pub rendered_prompt: String,
    pub raw_response: String,
    pub decoding: Decoding,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone)]
pub struct RunRequest {
    pub run_id: String,
    pub intervention_id: String,
    pub model_name: String,
    pub prompt_kind: PromptKind,
    pub prompt: String,
    pub decoding: Decoding,
}

impl RunRequest {
    pub fn new(
        run_id: String,
        intervention: &Intervention,
        model: &str,
        kind: PromptKind,
        decoding: Decoding,
    ) -> RunRequest {
        RunRequest {
            run_id,
            intervention_id: intervention.id.clone(),
            model_name: model.to_string(),
            prompt_kind: kind,
            prompt: build_prompt(kind, intervention),
            decoding,
        }
    }
}

/// Assigns run ids so that repeated runs of the same (intervention, model,
/// prompt) triple get increasing sequence numbers.
#[derive(Debug, Default)]
pub struct RunLog {
    seen: HashMap<(String, String, PromptKind), usize>,
}

impl RunLog {
    pub fn from_runs<'a>(runs: impl IntoIterator<Item = &'a GenerationRun>) -> RunLog {
        let mut log = RunLog::default();
        for r in runs {
            *log.seen.entry((r.intervention_id.clone(), r.model_name.clone(), r.prompt_kind)).or_insert(0) += 1;
        }
        log
    }

    pub fn next_id(&mut self, intervention_id: &str, model: &str, kind: PromptKind) -> String {
        let n = self.seen.entry((intervention_id.to_string(), model.to_string(), kind)).or_insert(0);
        *n += 1;
        format!("{intervention_id}:{model}:{}:{n}", kind.code())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_ids_count_up_per_triple() {
        let mut log = RunLog::default();
        assert_eq!(log.next_id("I1", "m", PromptKind::QueryOnly), "I1:m:q:1");
        assert_eq!(log.next_id("I1", "m", PromptKind::QueryOnly), "I1:m:q:2");
        assert_eq!(log.next_id("I1", "m", PromptKind::DefinitionPlusQuery), "I1:m:dq:1");
    }
}
