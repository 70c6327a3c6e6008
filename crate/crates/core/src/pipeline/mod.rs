//! The judgment log and everything computed from it: per-candidate state,
//! outcome groups, reports and the final dataset.
//!
//! All outputs are pure functions of the corpus snapshot, the stored runs and
//! the log, so replaying the log from scratch reproduces them exactly.

mod agreement;
mod dataset;
mod judgment;
mod report;
mod state;
mod suggest;

pub use agreement::{agreement_batch, compute_agreement, paired_labels, stage_agreement, StageAgreement};
pub use dataset::{
    assemble_dataset, Dataset, DatasetEntry, DatasetSummary, LlmCqEntry, LlmLink, LlmOrigin, NoArgumentRecord,
    TheoryCqEntry, DATASET_FORMAT,
};
pub use judgment::{
    check_subjects, subject_kind, CQTypeLabel, JudgmentRecord, JudgmentValue, RelevanceLabel, Stage, SubjectKind,
    Validity, VALIDITY_QUESTION,
};
pub use report::{
    matching_report, pct, relevance_report, render_table, type_report, validity_report, MatchingReport,
    RelevanceReport, RelevanceRow, TypeReport, TypeRow, ValidityReport,
};
pub use state::{classify, CQState, JudgmentIndex, OutcomeGroup, PipelineState, SubjectKey};
pub use suggest::{jaccard, rank_theory_matches};

use thiserror::Error;

use crate::schemes::SchemeError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{stage} incomplete for {} item(s): {}", .ids.len(), preview(.ids))]
    Incomplete { stage: Stage, ids: Vec<String> },
    #[error("candidate {candidate} has no {missing} judgment yet")]
    StageOrder { candidate: String, missing: Stage },
    #[error("record {id}: {message}")]
    InvalidRecord { id: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{stage} judgment refers to unknown id {id}")]
    UnknownSubject { stage: Stage, id: String },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("agreement: {0}")]
    Agreement(String),
}

fn preview(ids: &[String]) -> String {
    let head: Vec<&str> = ids.iter().take(5).map(String::as_str).collect();
    if ids.len() > 5 {
        format!("{}, ...", head.join(", "))
    } else {
        head.join(", ")
    }
}
