//! Task engine behind the annotation service.
//!
//! Tasks are never stored. They are derived from the folded judgment log on
//! every change, so restarting and refolding yields the same task list and
//! statuses. A task exists only once its prerequisites are judged.

mod engine;
mod log;
mod tasks;

pub use engine::{AnnotationEngine, Progress, StageProgress, Submission, SubmitRequest};
pub use log::JudgmentLog;
pub use tasks::{is_double_annotated, task_id, QuotaConfig, Task, TaskBoard, TaskStatus};

use thiserror::Error;

use crate::jsonl::JsonlError;
use crate::pipeline::PipelineError;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("unknown annotator {0:?}")]
    Auth(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Conflict(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error(transparent)]
    Log(#[from] JsonlError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}
