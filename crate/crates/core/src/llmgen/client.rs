use std::time::Duration;

use chrono::Utc;
use futures::stream::{self, StreamExt};
use serde::Deserialize;
use serde_json::json;

use super::{GenerationRun, LlmError, RunRequest};

/// Environment variable holding the bearer token for the endpoint.
pub const API_KEY_VAR: &str = "CQGEN_API_KEY";

#[derive(Debug, Clone)]
pub struct EndpointConfig {
    /// Base URL; requests go to `<base>/chat/completions`.
    pub base_url: String,
    pub api_key: Option<String>,
    /// Retries after the first attempt.
    pub retries: u32,
    pub backoff: Duration,
    pub max_backoff: Duration,
    pub timeout: Duration,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>) -> EndpointConfig {
        EndpointConfig {
            base_url: base_url.into(),
            api_key: None,
            retries: 2,
            backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(8),
            timeout: Duration::from_secs(120),
        }
    }

    /// Reads the credential from [`API_KEY_VAR`].
    pub fn with_env_key(mut self) -> EndpointConfig {
        self.api_key = std::env::var(API_KEY_VAR).ok().filter(|k| !k.is_empty());
        self
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

/// Client for a chat-completion style endpoint. The rendered prompt is sent as
/// the only user message; no system prompt is added.
#[derive(Debug, Clone)]
pub struct ChatClient {
    cfg: EndpointConfig,
    http: reqwest::Client,
}

impl ChatClient {
    pub fn new(cfg: EndpointConfig) -> Result<ChatClient, LlmError> {
        let http =
            reqwest::Client::builder().timeout(cfg.timeout).build().map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(ChatClient { cfg, http })
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'))
    }

    /// A single attempt.
    pub async fn complete(&self, req: &RunRequest) -> Result<String, LlmError> {
        let mut body = json!({
            "model": req.model_name,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.decoding.temperature,
            "max_tokens": req.decoding.max_tokens,
        });
        if let Some(seed) = req.decoding.seed {
            body["seed"] = json!(seed);
        }
        let mut call = self.http.post(self.url()).json(&body);
        if let Some(key) = &self.cfg.api_key {
            call = call.bearer_auth(key);
        }
        let resp = call.send().await.map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().await.map_err(|e| LlmError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(LlmError::Status { status: status.as_u16(), body: text });
        }
        let parsed: ChatResponse = serde_json::from_str(&text).map_err(|e| LlmError::Decode(e.to_string()))?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::Decode("no choices".to_string()))?;
        if content.trim().is_empty() {
            return Err(LlmError::Empty);
        }
        Ok(content)
    }

    fn delay(&self, attempt: u32) -> Duration {
        let d = self.cfg.backoff.saturating_mul(1u32.checked_shl(attempt).unwrap_or(u32::MAX));
        d.min(self.cfg.max_backoff)
    }
}

/// Runs one request with bounded exponential backoff on transient failures.
pub async fn generate(client: &ChatClient, req: RunRequest) -> Result<GenerationRun, LlmError> {
    let mut attempt = 0;
    loop {
        match client.complete(&req).await {
            Ok(raw) => {
                return Ok(GenerationRun {
                    id: req.run_id,
                    intervention_id: req.intervention_id,
                    model_name: req.model_name,
                    prompt_kind: req.prompt_kind,
                    rendered_prompt: req.prompt,
                    raw_response: raw,
                    decoding: req.decoding,
                    timestamp: Utc::now(),
                })
            }
            Err(e) if e.is_transient() && attempt < client.cfg.retries => {
                tracing::warn!(run = %req.run_id, attempt, error = %e, "retrying");
                tokio::time::sleep(client.delay(attempt)).await;
                attempt += 1;
            }
            Err(e) => {
                return Err(LlmError::RunFailed { run_id: req.run_id, attempts: attempt + 1, cause: Box::new(e) })
            }
        }
    }
}

/// Runs requests with at most `parallel` in flight. Results come back in
/// request order.
pub async fn generate_batch(
    client: &ChatClient,
    requests: Vec<RunRequest>,
    parallel: usize,
) -> Vec<Result<GenerationRun, LlmError>> {
    stream::iter(requests).map(|r| generate(client, r)).buffered(parallel.max(1)).collect().await
}
