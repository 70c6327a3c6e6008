use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::PipelineError;
use crate::schemes::VariableSlot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    FillVariables,
    PostEdit,
    RelevanceTriage,
    ArgumentMatch,
    TheoryMatch,
    ValidityJudgment,
    TypeLabel,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::FillVariables,
        Stage::PostEdit,
        Stage::RelevanceTriage,
        Stage::ArgumentMatch,
        Stage::TheoryMatch,
        Stage::ValidityJudgment,
        Stage::TypeLabel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::FillVariables => "FillVariables",
            Stage::PostEdit => "PostEdit",
            Stage::RelevanceTriage => "RelevanceTriage",
            Stage::ArgumentMatch => "ArgumentMatch",
            Stage::TheoryMatch => "TheoryMatch",
            Stage::ValidityJudgment => "ValidityJudgment",
            Stage::TypeLabel => "TypeLabel",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Stage, PipelineError> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| PipelineError::Invalid(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelevanceLabel {
    Relevant,
    NewConcept,
    BadReasoning,
    NonSpecific,
    Other,
}

impl RelevanceLabel {
    pub const ALL: [RelevanceLabel; 5] = [
        RelevanceLabel::Relevant,
        RelevanceLabel::NewConcept,
        RelevanceLabel::BadReasoning,
        RelevanceLabel::NonSpecific,
        RelevanceLabel::Other,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CQTypeLabel {
    Evidence,
    Relation,
    Consequences,
    Definition,
    Other,
    Alternative,
    Exception,
    Source,
}

impl CQTypeLabel {
    pub const ALL: [CQTypeLabel; 8] = [
        CQTypeLabel::Evidence,
        CQTypeLabel::Relation,
        CQTypeLabel::Consequences,
        CQTypeLabel::Definition,
        CQTypeLabel::Other,
        CQTypeLabel::Alternative,
        CQTypeLabel::Exception,
        CQTypeLabel::Source,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CQTypeLabel::Evidence => "evidence",
            CQTypeLabel::Relation => "relation",
            CQTypeLabel::Consequences => "consequences",
            CQTypeLabel::Definition => "definition",
            CQTypeLabel::Other => "other",
            CQTypeLabel::Alternative => "alternative",
            CQTypeLabel::Exception => "exception",
            CQTypeLabel::Source => "source",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Validity {
    Valid,
    Invalid,
}

/// The question shown to annotators for the validity stage.
pub const VALIDITY_QUESTION: &str = "Can the answer to this question diminish the acceptability of the argument?";

/// One line of the judgment log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub id: String,
    pub annotator: String,
    pub timestamp: DateTime<Utc>,
    pub stage: Stage,
    pub subject_ids: Vec<String>,
    pub value: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_id: Option<String>,
}

impl JudgmentRecord {
    pub fn decoded(&self) -> Result<JudgmentValue, PipelineError> {
        check_subjects(self.stage, &self.subject_ids)
            .and_then(|_| JudgmentValue::parse(self.stage, &self.value))
            .map_err(|e| PipelineError::InvalidRecord { id: self.id.clone(), message: e.to_string() })
    }

    /// Two records carry the same decision, ignoring id and time.
    pub fn same_decision(&self, other: &JudgmentRecord) -> bool {
        self.annotator == other.annotator
            && self.stage == other.stage
            && self.subject_ids == other.subject_ids
            && self.value == other.value
    }
}

/// Typed view of a record's `value`.
#[derive(Debug, Clone, PartialEq)]
pub enum JudgmentValue {
    Bindings(BTreeMap<VariableSlot, String>),
    Discard(String),
    Keep,
    Edit(String),
    Relevance(RelevanceLabel),
    Arguments(Vec<String>),
    TheoryCqs(Vec<String>),
    Validity(Validity),
    Type(CQTypeLabel),
    Skip(String),
}

fn invalid(stage: Stage, value: &Value) -> PipelineError {
    PipelineError::Invalid(format!("value {value} is not valid for stage {stage}"))
}

fn single_key<'a>(value: &'a Value, key: &str) -> Option<&'a Value> {
    value.as_object().filter(|o| o.len() == 1).and_then(|o| o.get(key))
}

fn reason(v: &Value) -> Option<String> {
    v.as_str().map(str::trim).filter(|s| !s.is_empty()).map(str::to_string)
}

fn id_list(v: &Value) -> Option<Vec<String>> {
    let items = v.as_array()?;
    let mut out: Vec<String> = items.iter().map(|i| i.as_str().map(str::to_string)).collect::<Option<_>>()?;
    let n = out.len();
    out.sort();
    out.dedup();
    (out.len() == n).then_some(out)
}

impl JudgmentValue {
    /// Checks that `value` has the shape the stage allows.
    pub fn parse(stage: Stage, value: &Value) -> Result<JudgmentValue, PipelineError> {
        if let Some(r) = single_key(value, "skip") {
            return reason(r).map(JudgmentValue::Skip).ok_or_else(|| invalid(stage, value));
        }
        let parsed = match stage {
            Stage::FillVariables => {
                if let Some(b) = single_key(value, "bindings") {
                    let map: BTreeMap<VariableSlot, String> =
                        serde_json::from_value(b.clone()).map_err(|_| invalid(stage, value))?;
                    if map.is_empty() {
                        return Err(invalid(stage, value));
                    }
                    for (slot, text) in &map {
                        slot.validate(text)?;
                    }
                    Some(JudgmentValue::Bindings(map))
                } else {
                    single_key(value, "discard").and_then(reason).map(JudgmentValue::Discard)
                }
            }
            Stage::PostEdit => {
                if single_key(value, "keep") == Some(&Value::Bool(true)) {
                    Some(JudgmentValue::Keep)
                } else if let Some(e) = single_key(value, "edit") {
                    reason(e).map(JudgmentValue::Edit)
                } else {
                    single_key(value, "discard").and_then(reason).map(JudgmentValue::Discard)
                }
            }
            Stage::RelevanceTriage => {
                serde_json::from_value::<RelevanceLabel>(value.clone()).ok().map(JudgmentValue::Relevance)
            }
            Stage::ArgumentMatch => id_list(value).map(JudgmentValue::Arguments),
            Stage::TheoryMatch => id_list(value).map(JudgmentValue::TheoryCqs),
            Stage::ValidityJudgment => match value.as_str() {
                Some("yes") => Some(JudgmentValue::Validity(Validity::Valid)),
                Some("no") => Some(JudgmentValue::Validity(Validity::Invalid)),
                _ => None,
            },
            Stage::TypeLabel => serde_json::from_value::<CQTypeLabel>(value.clone()).ok().map(JudgmentValue::Type),
        };
        parsed.ok_or_else(|| invalid(stage, value))
    }

    pub fn is_skip(&self) -> bool {
        matches!(self, JudgmentValue::Skip(_))
    }
}

/// What the subject ids of a record refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubjectKind {
    Argument,
    TheoryCq,
    Candidate,
    CandidateArgument,
}

pub fn subject_kind(stage: Stage, subjects: &[String]) -> Option<SubjectKind> {
    match (stage, subjects.len()) {
        (Stage::FillVariables, 1) => Some(SubjectKind::Argument),
        (Stage::PostEdit, 1) | (Stage::TypeLabel, 1) => Some(SubjectKind::TheoryCq),
        (Stage::RelevanceTriage, 1) | (Stage::ArgumentMatch, 1) => Some(SubjectKind::Candidate),
        (Stage::TheoryMatch, 2) | (Stage::ValidityJudgment, 2) | (Stage::TypeLabel, 2) => {
            Some(SubjectKind::CandidateArgument)
        }
        _ => None,
    }
}

pub fn check_subjects(stage: Stage, subjects: &[String]) -> Result<SubjectKind, PipelineError> {
    subject_kind(stage, subjects)
        .ok_or_else(|| PipelineError::Invalid(format!("stage {stage} cannot take {} subject id(s)", subjects.len())))
}
