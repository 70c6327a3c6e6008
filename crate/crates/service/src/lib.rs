//! HTTP annotation service.
//!
//! All routes live under `/api` and exchange JSON:
//!
//! ```text
//! GET  /api/health                  liveness
//! GET  /api/tasks?kind=&status=     list tasks (kind: stage name, status: open|done|skipped)
//! GET  /api/tasks/{id}              one task
//! POST /api/tasks/next              {annotator, kind?} -> claimed task, 204 when the queue is empty
//! POST /api/judgments               {annotator, stage, subject_ids, value, task_id?} -> {id, duplicate}
//! GET  /api/interventions/{id}      intervention with arguments, theory-CQs and candidates
//! GET  /api/progress                per-stage open/done/skipped counts and kappa so far
//! GET  /api/export                  the dataset, 409 while any stage is incomplete
//! POST /api/instantiate             {scheme | argument_id, bindings} -> instantiated question preview
//! ```
//!
//! Errors come back as `{"error": <kind>, "message": <text>}` with status
//! 401 (unknown annotator), 404, 409 (closed or claimed task, incomplete
//! export), 422 (bad value shape) or 500.

mod config;

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cqgen_core::annotation::{
    AnnotationEngine, AnnotationError, JudgmentLog, Progress, SubmitRequest, Task, TaskStatus,
};
use cqgen_core::corpus::SchemeId;
use cqgen_core::pipeline::{assemble_dataset, Dataset, PipelineError, Stage};
use cqgen_core::project::{Project, ProjectError, Roster};
use cqgen_core::schemes::{instantiate, postedit_reasons, PosteditReason, VariableSlot};
use cqgen_core::Exec;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use config::ServiceConfig;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error("{var}: {message}")]
    Config { var: &'static str, message: String },
    #[error("server: {0}")]
    Io(#[from] std::io::Error),
}

/// Builds the engine for a project directory. The roster file in the config
/// replaces the project's own `roster.json` when given.
pub fn open_engine(cfg: &ServiceConfig) -> Result<AnnotationEngine, ServiceError> {
    let project = Project::load(&cfg.data_dir)?;
    let roster = match &cfg.roster {
        Some(path) => Roster::load(path)?,
        None => project.roster.clone(),
    };
    let candidates = project.candidates(Exec::default());
    let log = JudgmentLog::open(&project.paths.judgments()).map_err(ProjectError::from)?;
    Ok(AnnotationEngine::new(project.corpus, project.registry, candidates, roster, cfg.quota.clone(), log)?)
}

/// Shared handle; every request takes the lock, so the log has a single
/// writer and reads never see a half-applied submission.
#[derive(Clone)]
pub struct AppState {
    engine: Arc<Mutex<AnnotationEngine>>,
}

impl AppState {
    pub fn new(engine: AnnotationEngine) -> AppState {
        AppState { engine: Arc::new(Mutex::new(engine)) }
    }

    fn lock(&self) -> MutexGuard<'_, AnnotationEngine> {
        // A panicking handler cannot leave a half-written record: the log
        // append is the last fallible step before the refold.
        self.engine.lock().unwrap_or_else(|e| e.into_inner())
    }
}

pub fn router(engine: AnnotationEngine) -> Router {
    Router::new()
        .route("/api/health", get(|| async { "ok" }))
        .route("/api/tasks", get(list_tasks))
        .route("/api/tasks/next", post(next_task))
        .route("/api/tasks/:id", get(get_task))
        .route("/api/judgments", post(submit))
        .route("/api/interventions/:id", get(intervention))
        .route("/api/progress", get(progress))
        .route("/api/export", get(export))
        .route("/api/instantiate", post(instantiate_preview))
        .with_state(AppState::new(engine))
}

/// Serves until ctrl-c.
pub async fn serve(cfg: ServiceConfig) -> Result<(), ServiceError> {
    let engine = open_engine(&cfg)?;
    let listener = tokio::net::TcpListener::bind(cfg.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, data = %cfg.data_dir.display(), "annotation service listening");
    axum::serve(listener, router(engine))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> ApiError {
        ApiError { status, kind, message: message.into() }
    }
}

impl From<AnnotationError> for ApiError {
    fn from(e: AnnotationError) -> ApiError {
        let (status, kind) = match &e {
            AnnotationError::Auth(_) => (StatusCode::UNAUTHORIZED, "auth"),
            AnnotationError::Validation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "validation"),
            AnnotationError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            AnnotationError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            AnnotationError::Log(_) | AnnotationError::Pipeline(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError::new(status, kind, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.kind, "message": self.message}))).into_response()
    }
}

#[derive(Debug, Default, Deserialize)]
struct TaskQuery {
    kind: Option<Stage>,
    status: Option<TaskStatus>,
}

async fn list_tasks(State(s): State<AppState>, Query(q): Query<TaskQuery>) -> Json<Vec<Task>> {
    Json(s.lock().tasks(q.kind, q.status))
}

async fn get_task(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<Task>, ApiError> {
    s.lock().task(&id).map(Json).ok_or_else(|| AnnotationError::NotFound(id).into())
}

#[derive(Debug, Deserialize)]
struct NextRequest {
    annotator: String,
    #[serde(default)]
    kind: Option<Stage>,
}

async fn next_task(State(s): State<AppState>, Json(req): Json<NextRequest>) -> Result<Response, ApiError> {
    match s.lock().next_task(&req.annotator, req.kind)? {
        Some(t) => Ok(Json(t).into_response()),
        None => Ok(StatusCode::NO_CONTENT.into_response()),
    }
}

async fn submit(State(s): State<AppState>, Json(req): Json<SubmitRequest>) -> Result<Response, ApiError> {
    let sub = s.lock().submit(req)?;
    let status = if sub.duplicate { StatusCode::OK } else { StatusCode::CREATED };
    Ok((status, Json(sub)).into_response())
}

async fn intervention(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    s.lock().intervention_context(&id).map(Json).ok_or_else(|| AnnotationError::NotFound(id).into())
}

async fn progress(State(s): State<AppState>) -> Json<Progress> {
    Json(s.lock().progress())
}

async fn export(State(s): State<AppState>) -> Result<Json<Dataset>, ApiError> {
    let engine = s.lock();
    assemble_dataset(engine.state()).map(Json).map_err(|e| match e {
        PipelineError::Incomplete { .. } | PipelineError::StageOrder { .. } => {
            ApiError::new(StatusCode::CONFLICT, "incomplete", e.to_string())
        }
        other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", other.to_string()),
    })
}

#[derive(Debug, Deserialize)]
struct InstantiateRequest {
    #[serde(default)]
    scheme: Option<SchemeId>,
    #[serde(default)]
    argument_id: Option<String>,
    bindings: BTreeMap<VariableSlot, String>,
}

#[derive(Debug, Serialize)]
struct Preview {
    template_index: usize,
    text: String,
    needs_postedit: bool,
    reasons: Vec<PosteditReason>,
}

/// Renders every question of the scheme without touching the log, so the
/// variable-filling view can show breakage before the bindings are submitted.
async fn instantiate_preview(
    State(s): State<AppState>,
    Json(req): Json<InstantiateRequest>,
) -> Result<Json<Vec<Preview>>, ApiError> {
    let engine = s.lock();
    let scheme = match (&req.scheme, &req.argument_id) {
        (Some(s), _) => *s,
        (None, Some(id)) => engine.state().argument(id).ok_or_else(|| AnnotationError::NotFound(id.clone()))?.scheme,
        (None, None) => {
            return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", "scheme or argument_id required"))
        }
    };
    let template = engine.registry().get(scheme);
    let mut out = Vec::with_capacity(template.cq_patterns.len());
    for (i, p) in template.cq_patterns.iter().enumerate() {
        let text = instantiate(p, &req.bindings)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", e.to_string()))?;
        let reasons = postedit_reasons(&text);
        out.push(Preview { template_index: i, needs_postedit: !reasons.is_empty(), text, reasons });
    }
    Ok(Json(out))
}
