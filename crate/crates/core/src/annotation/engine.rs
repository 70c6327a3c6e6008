use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{task_id, AnnotationError, JudgmentLog, QuotaConfig, Task, TaskBoard, TaskStatus};
use crate::corpus::{Corpus, Intervention};
use crate::llmgen::CandidateCQ;
use crate::pipeline::{
    check_subjects, stage_agreement, JudgmentRecord, JudgmentValue, PipelineState, Stage, StageAgreement,
};
use crate::project::Roster;
use crate::schemes::{instantiate_cqs_with, Registry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitRequest {
    pub annotator: String,
    pub stage: Stage,
    pub subject_ids: Vec<String>,
    pub value: Value,
    #[serde(default)]
    pub task_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub id: String,
    /// True when the same decision was already on record and nothing was
    /// appended.
    pub duplicate: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageProgress {
    pub open: usize,
    pub done: usize,
    pub skipped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<f64>,
    pub agreement_items: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub stages: BTreeMap<Stage, StageProgress>,
}

/// Project state plus the log writer. Callers serialize access (the
/// service keeps it behind a lock), which makes the log single-writer.
#[derive(Debug)]
pub struct AnnotationEngine {
    corpus: Corpus,
    registry: Registry,
    candidates: Vec<CandidateCQ>,
    roster: Roster,
    quota: QuotaConfig,
    log: JudgmentLog,
    state: PipelineState,
    board: TaskBoard,
    claims: HashMap<String, String>,
}

impl AnnotationEngine {
    pub fn new(
        corpus: Corpus,
        registry: Registry,
        candidates: Vec<CandidateCQ>,
        roster: Roster,
        quota: QuotaConfig,
        log: JudgmentLog,
    ) -> Result<AnnotationEngine, AnnotationError> {
        let state = PipelineState::fold(&corpus, &registry, candidates.clone(), log.records())?;
        let board = TaskBoard::build(&state, &registry, log.records(), &quota);
        Ok(AnnotationEngine { corpus, registry, candidates, roster, quota, log, state, board, claims: HashMap::new() })
    }

    fn refresh(&mut self) -> Result<(), AnnotationError> {
        self.state = PipelineState::fold(&self.corpus, &self.registry, self.candidates.clone(), self.log.records())?;
        self.board = TaskBoard::build(&self.state, &self.registry, self.log.records(), &self.quota);
        self.claims.retain(|id, _| self.board.get(id).is_some_and(|t| t.status != TaskStatus::Done));
        Ok(())
    }

    pub fn state(&self) -> &PipelineState {
        &self.state
    }

    pub fn records(&self) -> &[JudgmentRecord] {
        self.log.records()
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    fn check_annotator(&self, annotator: &str) -> Result<(), AnnotationError> {
        if self.roster.contains(annotator) {
            Ok(())
        } else {
            Err(AnnotationError::Auth(annotator.to_string()))
        }
    }

    /// Tasks with their claim holder filled in.
    pub fn tasks(&self, kind: Option<Stage>, status: Option<TaskStatus>) -> Vec<Task> {
        self.board
            .tasks()
            .iter()
            .filter(|t| kind.is_none_or(|k| t.kind == k) && status.is_none_or(|s| t.status == s))
            .map(|t| self.with_claim(t))
            .collect()
    }

    pub fn task(&self, id: &str) -> Option<Task> {
        self.board.get(id).map(|t| self.with_claim(t))
    }

    fn with_claim(&self, t: &Task) -> Task {
        let mut t = t.clone();
        t.assigned_to = self.claims.get(&t.id).cloned();
        t
    }

    /// Claims and returns the next task for the annotator.
    pub fn next_task(&mut self, annotator: &str, kind: Option<Stage>) -> Result<Option<Task>, AnnotationError> {
        self.check_annotator(annotator)?;
        let Some(task) = self.board.next_for(annotator, kind, &self.claims) else { return Ok(None) };
        let id = task.id.clone();
        self.claims.insert(id.clone(), annotator.to_string());
        Ok(self.task(&id))
    }

    pub fn submit(&mut self, req: SubmitRequest) -> Result<Submission, AnnotationError> {
        self.submit_at(req, Utc::now())
    }

    pub fn submit_at(&mut self, req: SubmitRequest, timestamp: DateTime<Utc>) -> Result<Submission, AnnotationError> {
        self.check_annotator(&req.annotator)?;
        check_subjects(req.stage, &req.subject_ids).map_err(|e| AnnotationError::Validation(e.to_string()))?;
        let value =
            JudgmentValue::parse(req.stage, &req.value).map_err(|e| AnnotationError::Validation(e.to_string()))?;
        let id = task_id(req.stage, &req.subject_ids);
        if req.task_id.as_ref().is_some_and(|t| *t != id) {
            return Err(AnnotationError::Validation(format!("task id does not match subjects (expected {id})")));
        }
        let previous = self
            .log
            .records()
            .iter()
            .rev()
            .find(|r| r.annotator == req.annotator && r.stage == req.stage && r.subject_ids == req.subject_ids);
        if let Some(prev) = previous {
            if prev.value == req.value {
                return Ok(Submission { id: prev.id.clone(), duplicate: true });
            }
        }
        let task =
            self.board.get(&id).ok_or_else(|| AnnotationError::Conflict(format!("task {id} is not available")))?;
        if let Some(holder) = self.claims.get(&id).filter(|h| **h != req.annotator) {
            return Err(AnnotationError::Conflict(format!("task {id} is assigned to {holder}")));
        }
        if previous.is_some() {
            if let Some(dep) = self.dependent_of(req.stage, &req.subject_ids) {
                return Err(AnnotationError::Conflict(format!("cannot revise {id}: {dep} depends on it")));
            }
        } else if !self.board.available_to(task, &req.annotator) {
            return Err(AnnotationError::Conflict(format!("task {id} is closed")));
        }
        self.check_references(&req, &value)?;

        let record = JudgmentRecord {
            id: String::new(),
            annotator: req.annotator,
            timestamp,
            stage: req.stage,
            subject_ids: req.subject_ids,
            value: req.value,
            task_id: Some(id.clone()),
        };
        let accepted = self.log.append(record)?;
        self.claims.remove(&id);
        self.refresh()?;
        Ok(Submission { id: accepted, duplicate: false })
    }

    fn check_references(&self, req: &SubmitRequest, value: &JudgmentValue) -> Result<(), AnnotationError> {
        let invalid = |m: String| Err(AnnotationError::Validation(m));
        let intervention_of = |cand: &str| self.state.candidate(cand).map(|(c, _)| c.intervention_id.clone());
        match value {
            JudgmentValue::Bindings(b) => {
                let mut arg = self.state.argument(&req.subject_ids[0]).expect("task exists").clone();
                let allowed = self.registry.get(arg.scheme).slots();
                if let Some(extra) = b.keys().find(|s| !allowed.contains(s)) {
                    return invalid(format!("slot {extra} is not used by scheme {}", arg.scheme));
                }
                arg.bindings = b.clone();
                arg.discarded = false;
                instantiate_cqs_with(&self.registry, &arg).map_err(|e| AnnotationError::Validation(e.to_string()))?;
            }
            JudgmentValue::Arguments(ids) => {
                let iv = intervention_of(&req.subject_ids[0]);
                for a in ids {
                    let ok =
                        self.state.argument(a).is_some_and(|x| !x.discarded && Some(&x.intervention_id) == iv.as_ref());
                    if !ok {
                        return invalid(format!("{a} is not an argument of this intervention"));
                    }
                }
            }
            JudgmentValue::TheoryCqs(ids) => {
                for q in ids {
                    let ok =
                        self.state.theory_cq(q).is_some_and(|c| !c.discarded && c.argument_id == req.subject_ids[1]);
                    if !ok {
                        return invalid(format!("{q} is not a theory-CQ of {}", req.subject_ids[1]));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// A judgment in the log that was made on top of the given one.
    fn dependent_of(&self, stage: Stage, subjects: &[String]) -> Option<String> {
        let s0 = subjects[0].as_str();
        let hit = self.state.index.keys().find(|(st, ids)| match (stage, st) {
            (Stage::FillVariables, Stage::PostEdit) => ids[0].starts_with(&format!("{s0}/cq")),
            (Stage::FillVariables, Stage::TheoryMatch) => ids[1] == s0,
            (Stage::PostEdit, Stage::TypeLabel) => ids.len() == 1 && ids[0] == s0,
            (Stage::PostEdit, Stage::TheoryMatch) => self.state.theory_cq(s0).is_some_and(|c| c.argument_id == ids[1]),
            (Stage::RelevanceTriage, Stage::ArgumentMatch) => ids[0] == s0,
            (Stage::ArgumentMatch, Stage::TheoryMatch) => ids[0] == s0,
            (Stage::TheoryMatch, Stage::ValidityJudgment) | (Stage::TheoryMatch, Stage::TypeLabel) => ids == subjects,
            (Stage::ValidityJudgment, Stage::TypeLabel) => ids == subjects,
            _ => false,
        });
        hit.map(|(st, ids)| task_id(*st, ids))
    }

    pub fn progress(&self) -> Progress {
        let agreement: HashMap<Stage, StageAgreement> =
            stage_agreement(&self.state.index).into_iter().map(|a| (a.stage, a)).collect();
        let mut stages = BTreeMap::new();
        for stage in Stage::ALL {
            let mut p = StageProgress::default();
            for t in self.board.tasks().iter().filter(|t| t.kind == stage) {
                match t.status {
                    TaskStatus::Open => p.open += 1,
                    TaskStatus::Done => p.done += 1,
                    TaskStatus::Skipped => p.skipped += 1,
                }
            }
            if let Some(a) = agreement.get(&stage) {
                p.agreement = a.kappa;
                p.agreement_items = a.items;
            }
            stages.insert(stage, p);
        }
        Progress { stages }
    }

    /// An intervention with its arguments and the current theory-CQs.
    pub fn intervention_context(&self, id: &str) -> Option<Value> {
        let iv: &Intervention = self.corpus.intervention(id)?;
        let args: Vec<_> = self.state.arguments.iter().filter(|a| a.intervention_id == id).collect();
        let cqs: Vec<_> = self.state.theory_cqs.iter().filter(|c| args.iter().any(|a| a.id == c.argument_id)).collect();
        let candidates: Vec<_> = self.state.candidates.iter().filter(|c| c.intervention_id == id).collect();
        Some(serde_json::json!({
            "intervention": iv,
            "text": crate::llmgen::join_propositions(&iv.propositions),
            "arguments": args,
            "theory_cqs": cqs,
            "candidates": candidates,
        }))
    }
}
