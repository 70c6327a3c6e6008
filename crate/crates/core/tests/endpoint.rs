//! The chat client against an in-process mock endpoint.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use cqgen_core::corpus::{Intervention, SourceDataset};
use cqgen_core::llmgen::{
    generate, generate_batch, parse_candidates, ChatClient, Decoding, EndpointConfig, LlmError, PromptKind, RunRequest,
};
use serde_json::{json, Value};

#[derive(Clone, Default)]
struct Mock {
    /// Statuses to return before answering normally.
    failures: Arc<Mutex<Vec<u16>>>,
    reply: Arc<Mutex<String>>,
    calls: Arc<AtomicUsize>,
    last_body: Arc<Mutex<Value>>,
    last_auth: Arc<Mutex<Option<String>>>,
}

async fn chat(State(m): State<Mock>, headers: HeaderMap, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    m.calls.fetch_add(1, Ordering::SeqCst);
    *m.last_auth.lock().unwrap() = headers.get("authorization").map(|h| h.to_str().unwrap().to_string());
    *m.last_body.lock().unwrap() = body.clone();
    if let Some(code) = m.failures.lock().unwrap().pop() {
        return (StatusCode::from_u16(code).unwrap(), Json(json!({"error": "boom"})));
    }
    // echo the prompt back when asked to, so batch order can be checked
    let reply = m.reply.lock().unwrap().clone();
    let content = if reply == "ECHO" { body["messages"][0]["content"].as_str().unwrap().to_string() } else { reply };
    (StatusCode::OK, Json(json!({"choices": [{"message": {"role": "assistant", "content": content}}]})))
}

async fn start(mock: Mock) -> SocketAddr {
    let app = Router::new().route("/v1/chat/completions", post(chat)).with_state(mock);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    addr
}

fn client(addr: SocketAddr, retries: u32) -> ChatClient {
    let mut cfg = EndpointConfig::new(format!("http://{addr}/v1/"));
    cfg.retries = retries;
    cfg.backoff = Duration::from_millis(1);
    cfg.api_key = Some("secret".into());
    ChatClient::new(cfg).unwrap()
}

fn iv(id: &str) -> Intervention {
    Intervention {
        id: id.into(),
        speaker: "SPEAKER_A".into(),
        source_dataset: SourceDataset::US2016,
        propositions: vec![format!("{id} said something"), "and then more".into()],
        proposition_ids: vec!["1".into(), "2".into()],
        arguments: vec![],
    }
}

fn request(id: &str, kind: PromptKind) -> RunRequest {
    RunRequest::new(format!("{id}:m:{}:1", kind.code()), &iv(id), "m", kind, Decoding::default())
}

#[tokio::test]
async fn response_is_stored_verbatim_and_parsed() {
    let mock = Mock::default();
    *mock.reply.lock().unwrap() = "1. Q1? 2. Q2?".into();
    let addr = start(mock.clone()).await;
    let run = generate(&client(addr, 0), request("a", PromptKind::QueryOnly)).await.unwrap();
    assert_eq!(run.raw_response, "1. Q1? 2. Q2?");
    let texts: Vec<String> = parse_candidates(&run).into_iter().map(|c| c.text).collect();
    assert_eq!(texts, vec!["Q1?", "Q2?"]);

    let body = mock.last_body.lock().unwrap().clone();
    assert_eq!(body["model"], "m");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], 512);
    assert_eq!(body["messages"].as_array().unwrap().len(), 1);
    assert_eq!(body["messages"][0]["content"], run.rendered_prompt.as_str());
    assert!(body.get("seed").is_none());
    assert_eq!(mock.last_auth.lock().unwrap().as_deref(), Some("Bearer secret"));
}

#[tokio::test]
async fn transient_failures_are_retried() {
    let mock = Mock::default();
    *mock.reply.lock().unwrap() = "1. Q?".into();
    *mock.failures.lock().unwrap() = vec![503, 500];
    let addr = start(mock.clone()).await;
    let run = generate(&client(addr, 2), request("a", PromptKind::QueryOnly)).await.unwrap();
    assert_eq!(run.raw_response, "1. Q?");
    assert_eq!(mock.calls.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn retry_budget_is_bounded() {
    let mock = Mock::default();
    *mock.failures.lock().unwrap() = vec![500, 500, 500];
    let addr = start(mock.clone()).await;
    let err = generate(&client(addr, 2), request("a", PromptKind::QueryOnly)).await.unwrap_err();
    match err {
        LlmError::RunFailed { attempts, cause, .. } => {
            assert_eq!(attempts, 3);
            assert!(matches!(*cause, LlmError::Status { status: 500, .. }));
        }
        other => panic!("unexpected {other}"),
    }
    assert_eq!(mock.calls.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn empty_and_client_errors_are_not_retried() {
    let mock = Mock::default();
    *mock.reply.lock().unwrap() = "   ".into();
    let addr = start(mock.clone()).await;
    let err = generate(&client(addr, 3), request("a", PromptKind::QueryOnly)).await.unwrap_err();
    assert!(
        matches!(err, LlmError::RunFailed { ref cause, attempts: 1, .. } if matches!(**cause, LlmError::Empty)),
        "{err}"
    );

    *mock.failures.lock().unwrap() = vec![400];
    let err = generate(&client(addr, 3), request("a", PromptKind::QueryOnly)).await.unwrap_err();
    assert!(matches!(err, LlmError::RunFailed { attempts: 1, .. }), "{err}");
    assert_eq!(mock.calls.load(Ordering::SeqCst), 2);
}

#[tokio::test]
async fn unreachable_endpoint_fails_after_retries() {
    // bind then drop to get a port nobody listens on
    let addr = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap().local_addr().unwrap();
    let err = generate(&client(addr, 1), request("a", PromptKind::QueryOnly)).await.unwrap_err();
    assert!(
        matches!(err, LlmError::RunFailed { attempts: 2, ref cause, .. } if matches!(**cause, LlmError::Transport(_))),
        "{err}"
    );
}

#[tokio::test]
async fn batch_results_keep_request_order() {
    let mock = Mock::default();
    *mock.reply.lock().unwrap() = "ECHO".into();
    let addr = start(mock.clone()).await;
    let reqs: Vec<RunRequest> = (0..12)
        .map(|i| {
            request(&format!("iv{i}"), if i % 2 == 0 { PromptKind::QueryOnly } else { PromptKind::DefinitionPlusQuery })
        })
        .collect();
    let prompts: Vec<String> = reqs.iter().map(|r| r.prompt.clone()).collect();
    let runs = generate_batch(&client(addr, 0), reqs, 4).await;
    let got: Vec<String> = runs.into_iter().map(|r| r.unwrap().raw_response).collect();
    assert_eq!(got, prompts);
}
