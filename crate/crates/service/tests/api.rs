use std::path::Path;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use cqgen_core::pipeline::assemble_dataset;
use cqgen_core::project::Project;
use cqgen_core::Exec;
use cqgen_service::{open_engine, router, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

fn gold_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/gold")
}

/// The gold corpus and runs; the judgment log is empty unless `with_log`.
fn project(with_log: bool) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for f in ["snapshot.jsonl", "runs.jsonl", "roster.json"] {
        std::fs::copy(gold_dir().join(f), dir.path().join(f)).unwrap();
    }
    if with_log {
        std::fs::copy(gold_dir().join("judgments.jsonl"), dir.path().join("judgments.jsonl")).unwrap();
    }
    dir
}

fn app(dir: &TempDir) -> Router {
    router(open_engine(&ServiceConfig::new(dir.path())).unwrap())
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
    (status, value)
}

fn fill(annotator: &str, bindings: Value) -> Value {
    json!({
        "annotator": annotator,
        "stage": "FillVariables",
        "subject_ids": ["US2016-us01RA24"],
        "value": {"bindings": bindings},
    })
}

#[tokio::test]
async fn health() {
    let dir = project(false);
    let app = app(&dir);
    let resp = app.clone().oneshot(Request::get("/api/health").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
}

#[tokio::test]
async fn fill_task_carries_the_four_columns() {
    let dir = project(false);
    let app = app(&dir);
    let (status, task) = call(&app, Method::GET, "/api/tasks/FillVariables:US2016-us01RA24", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(task["status"], "open");
    let p = &task["payload"];
    assert_eq!(p["argument_scheme"], "Argument from CauseToEffect");
    assert!(p["scheme_template"]["conclusion"].as_str().unwrap().contains("<eventB>"));
    assert_eq!(p["propositions"]["premises"], json!(["People are pouring into our country"]));
    assert_eq!(p["propositions"]["conclusion"], "We're losing our jobs");
    assert_eq!(p["intervention"]["id"], "US2016-us01L1");
    assert!(p["intervention"]["text"].as_str().unwrap().starts_with("I want to make America great again"));
}

#[tokio::test]
async fn submission_lifecycle() {
    let dir = project(false);
    let app = app(&dir);
    let bindings = json!({"eventA": "people are pouring into the USA", "eventB": "Americans might lose their jobs"});

    let (status, first) = call(&app, Method::POST, "/api/judgments", Some(fill("ann1", bindings.clone()))).await;
    assert_eq!(status, StatusCode::CREATED, "{first}");
    assert_eq!(first["duplicate"], false);

    let (status, again) = call(&app, Method::POST, "/api/judgments", Some(fill("ann1", bindings.clone()))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again["id"], first["id"]);
    assert_eq!(again["duplicate"], true);

    // the record reached the file
    let log = std::fs::read_to_string(dir.path().join("judgments.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 1);
    assert!(log.contains("people are pouring into the USA"));

    // the instantiated questions are now up for post-editing
    let (_, ctx) = call(&app, Method::GET, "/api/interventions/US2016-us01L1", None).await;
    let cqs = ctx["theory_cqs"].as_array().unwrap();
    assert!(cqs.iter().any(|q| q["text"].as_str().unwrap().contains("Americans might lose their jobs")));
    let (_, open) = call(&app, Method::GET, "/api/tasks?kind=PostEdit&status=open", None).await;
    assert_eq!(open.as_array().unwrap().len(), cqs.len());

    let (status, err) = call(&app, Method::POST, "/api/judgments", Some(fill("mallory", bindings))).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    assert_eq!(err["error"], "auth");
}

#[tokio::test]
async fn malformed_values_are_rejected() {
    let dir = project(true);
    let app = app(&dir);
    let (_, pairs) = call(&app, Method::GET, "/api/tasks?kind=ValidityJudgment", None).await;
    let subjects = pairs[0]["subject_ids"].clone();
    let body = json!({"annotator": "ann2", "stage": "ValidityJudgment", "subject_ids": subjects, "value": "maybe"});
    let (status, err) = call(&app, Method::POST, "/api/judgments", Some(body)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"], "validation");

    let (status, _) = call(&app, Method::POST, "/api/judgments", Some(fill("ann1", json!({"nonsense": "x"})))).await;
    assert!(status.is_client_error());
}

#[tokio::test]
async fn fresh_project_progress_and_export() {
    let dir = project(false);
    let app = app(&dir);
    let (status, progress) = call(&app, Method::GET, "/api/progress", None).await;
    assert_eq!(status, StatusCode::OK);
    let fill = &progress["stages"]["FillVariables"];
    assert_eq!(fill["done"], 0);
    assert!(fill["open"].as_u64().unwrap() > 0);
    assert!(fill.get("agreement").is_none());

    let (status, err) = call(&app, Method::GET, "/api/export", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"], "incomplete");
}

#[tokio::test]
async fn completed_project_exports_the_dataset() {
    let dir = project(true);
    let app = app(&dir);
    let (status, body) = call(&app, Method::GET, "/api/export", None).await;
    assert_eq!(status, StatusCode::OK);
    let state = Project::load(dir.path()).unwrap().state(Exec::Sequential).unwrap();
    assert_eq!(body, serde_json::to_value(assemble_dataset(&state).unwrap()).unwrap());

    let (_, progress) = call(&app, Method::GET, "/api/progress", None).await;
    assert!(progress["stages"]["RelevanceTriage"]["agreement"].is_number());
}

#[tokio::test]
async fn instantiate_preview_flags_breakage() {
    let dir = project(false);
    let app = app(&dir);
    let body = json!({
        "scheme": "CauseToEffect",
        "bindings": {"eventA": "people are pouring into the USA", "eventB": "Americans might lose their jobs"},
    });
    let (status, preview) = call(&app, Method::POST, "/api/instantiate", Some(body)).await;
    assert_eq!(status, StatusCode::OK, "{preview}");
    let items = preview.as_array().unwrap();
    assert!(!items.is_empty());
    for (i, item) in items.iter().enumerate() {
        assert_eq!(item["template_index"], i);
        assert!(!item["text"].as_str().unwrap().contains('<'));
        assert_eq!(item["needs_postedit"], !item["reasons"].as_array().unwrap().is_empty());
    }

    let by_arg = json!({"argument_id": "US2016-us01RA24", "bindings": {"eventA": "x"}});
    let (status, err) = call(&app, Method::POST, "/api/instantiate", Some(by_arg)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{err}");
    // nothing was written
    assert!(std::fs::read_to_string(dir.path().join("judgments.jsonl")).unwrap_or_default().is_empty());
}

#[tokio::test]
async fn missing_things_and_empty_queues() {
    let dir = project(true);
    let app = app(&dir);
    let (status, err) = call(&app, Method::GET, "/api/tasks/PostEdit:nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["error"], "not_found");
    let (status, _) = call(&app, Method::GET, "/api/interventions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    // every stage of the gold project is complete
    for annotator in ["ann1", "ann2"] {
        let (status, body) = call(&app, Method::POST, "/api/tasks/next", Some(json!({"annotator": annotator}))).await;
        assert_eq!(status, StatusCode::NO_CONTENT, "{body}");
    }
}

#[tokio::test]
async fn claimed_tasks_belong_to_their_holder() {
    let dir = project(false);
    let app = app(&dir);
    let (status, task) =
        call(&app, Method::POST, "/api/tasks/next", Some(json!({"annotator": "ann1", "kind": "FillVariables"}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(task["assigned_to"], "ann1");
    let body = json!({
        "annotator": "ann2",
        "stage": "FillVariables",
        "subject_ids": task["subject_ids"],
        "value": {"discard": "not an instance"},
    });
    let (status, err) = call(&app, Method::POST, "/api/judgments", Some(body)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"], "conflict");

    // asking again hands back the same claim
    let (_, again) =
        call(&app, Method::POST, "/api/tasks/next", Some(json!({"annotator": "ann1", "kind": "FillVariables"}))).await;
    assert_eq!(again["id"], task["id"]);
}
