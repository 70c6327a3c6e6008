use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::corpus::{ArgumentInstance, Intervention};
use crate::llmgen::join_propositions;
use crate::pipeline::{
    rank_theory_matches, CQTypeLabel, JudgmentRecord, JudgmentValue, PipelineState, RelevanceLabel, Stage, Validity,
    VALIDITY_QUESTION,
};
use crate::schemes::{postedit_reasons, InstantiatedCQ, Registry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotaConfig {
    /// Share of tasks that get a second annotator.
    pub double_rate: f64,
}

impl Default for QuotaConfig {
    fn default() -> Self {
        QuotaConfig { double_rate: 0.2 }
    }
}

/// `<kind>:<subject ids joined by '|'>`
pub fn task_id(stage: Stage, subjects: &[String]) -> String {
    format!("{stage}:{}", subjects.join("|"))
}

/// Deterministic sampling: the first eight bytes of the SHA-256 of the task id,
/// read as a fraction of the u64 range, compared against the rate.
pub fn is_double_annotated(id: &str, rate: f64) -> bool {
    let digest = Sha256::digest(id.as_bytes());
    let head = u64::from_be_bytes(digest[..8].try_into().expect("8 bytes"));
    (head as f64 / u64::MAX as f64) < rate
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Open,
    Done,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub kind: Stage,
    pub subject_ids: Vec<String>,
    pub payload: Value,
    pub status: TaskStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assigned_to: Option<String>,
    /// Annotators with a judgment on this task, first one owns the result.
    pub annotators: Vec<String>,
    pub required: usize,
}

#[derive(Debug, Clone, Default)]
pub struct TaskBoard {
    tasks: Vec<Task>,
    by_id: HashMap<String, usize>,
    skipped_by: HashMap<String, BTreeSet<String>>,
}

fn intervention_view(iv: &Intervention) -> Value {
    json!({
        "id": iv.id,
        "speaker": iv.speaker,
        "propositions": iv.propositions,
        "text": join_propositions(&iv.propositions),
    })
}

fn argument_view(arg: &ArgumentInstance, iv: &Intervention) -> Value {
    let props: Vec<&str> = arg.proposition_refs.iter().map(|i| iv.propositions[*i].as_str()).collect();
    json!({
        "id": arg.id,
        "scheme": arg.scheme,
        "scheme_name": arg.scheme.display_name(),
        "premises": &props[..props.len() - 1],
        "conclusion": props[props.len() - 1],
    })
}

fn theory_view(cq: &InstantiatedCQ) -> Value {
    json!({"id": cq.id, "text": cq.final_text(), "template_index": cq.template_index})
}

impl TaskBoard {
    pub fn build(
        state: &PipelineState,
        registry: &Registry,
        records: &[JudgmentRecord],
        cfg: &QuotaConfig,
    ) -> TaskBoard {
        let mut board = TaskBoard::default();
        for r in records {
            if matches!(JudgmentValue::parse(r.stage, &r.value), Ok(JudgmentValue::Skip(_))) {
                board.skipped_by.entry(task_id(r.stage, &r.subject_ids)).or_default().insert(r.annotator.clone());
            }
        }
        let ivs: HashMap<&str, &Intervention> = state.corpus.interventions.iter().map(|i| (i.id.as_str(), i)).collect();
        let post_edited =
            |cq: &InstantiatedCQ| state.index.effective(Stage::PostEdit, std::slice::from_ref(&cq.id)).is_some();

        for arg in &state.arguments {
            let iv = ivs[arg.intervention_id.as_str()];
            let t = registry.get(arg.scheme);
            let slots: Vec<&str> = t.slots().into_iter().map(|s| s.as_str()).collect();
            let payload = json!({
                "argument_scheme": arg.scheme.display_name(),
                "scheme_template": {"premises": t.premise_patterns, "conclusion": t.conclusion_pattern},
                "propositions": argument_view(arg, iv),
                "intervention": intervention_view(iv),
                "slots": slots,
                "optional_empty_slots": ["neg"],
            });
            board.push(state, cfg, Stage::FillVariables, vec![arg.id.clone()], payload);
        }

        for cq in &state.theory_cqs {
            let arg = state.argument(&cq.argument_id).expect("theory-CQ argument exists");
            let iv = ivs[arg.intervention_id.as_str()];
            let reasons: Vec<String> = postedit_reasons(&cq.text).iter().map(|r| format!("{r:?}")).collect();
            let payload = json!({
                "text": cq.text,
                "needs_postedit": cq.needs_postedit,
                "heuristics": reasons,
                "argument": argument_view(arg, iv),
                "intervention": intervention_view(iv),
            });
            board.push(state, cfg, Stage::PostEdit, vec![cq.id.clone()], payload);
        }

        for cq in state.theory_cqs.iter().filter(|c| !c.discarded && post_edited(c)) {
            let payload = json!({"text": cq.final_text(), "origin": "theory", "labels": CQTypeLabel::ALL});
            board.push(state, cfg, Stage::TypeLabel, vec![cq.id.clone()], payload);
        }

        for (c, s) in state.candidates.iter().zip(&state.states) {
            let iv = ivs[c.intervention_id.as_str()];
            let payload = json!({
                "candidate": {"id": c.id, "text": c.text},
                "intervention": intervention_view(iv),
                "labels": RelevanceLabel::ALL,
            });
            board.push(state, cfg, Stage::RelevanceTriage, vec![c.id.clone()], payload);
            if s.relevance != Some(RelevanceLabel::Relevant) {
                continue;
            }
            let args: Vec<Value> =
                state.live_arguments().filter(|a| a.intervention_id == iv.id).map(|a| argument_view(a, iv)).collect();
            let payload = json!({
                "candidate": {"id": c.id, "text": c.text},
                "intervention": intervention_view(iv),
                "arguments": args,
            });
            board.push(state, cfg, Stage::ArgumentMatch, vec![c.id.clone()], payload);

            for a in s.matched_arguments() {
                let Some(arg) = state.argument(a).filter(|x| !x.discarded) else { continue };
                let cqs: Vec<InstantiatedCQ> =
                    state.theory_cqs.iter().filter(|q| q.argument_id == *a).cloned().collect();
                if cqs.is_empty() || !cqs.iter().all(post_edited) {
                    continue;
                }
                let live: Vec<InstantiatedCQ> = cqs.into_iter().filter(|q| !q.discarded).collect();
                let ranked: Vec<Value> =
                    rank_theory_matches(&c.text, &live).into_iter().map(|(q, _)| theory_view(q)).collect();
                let subjects = vec![c.id.clone(), a.clone()];
                let payload = json!({
                    "candidate": {"id": c.id, "text": c.text},
                    "argument": argument_view(arg, iv),
                    "theory_cqs": ranked,
                });
                board.push(state, cfg, Stage::TheoryMatch, subjects.clone(), payload);

                let Some(matches) = s.theory_matches.get(a) else { continue };
                let pair_view = json!({
                    "candidate": {"id": c.id, "text": c.text},
                    "argument": argument_view(arg, iv),
                });
                if matches.is_empty() {
                    let mut payload = pair_view.clone();
                    payload["question"] = json!(VALIDITY_QUESTION);
                    payload["answers"] = json!(["yes", "no"]);
                    board.push(state, cfg, Stage::ValidityJudgment, subjects.clone(), payload);
                }
                if !matches.is_empty() || s.validity.get(a) == Some(&Validity::Valid) {
                    let mut payload = pair_view;
                    payload["origin"] = json!("llm");
                    payload["labels"] = json!(CQTypeLabel::ALL);
                    board.push(state, cfg, Stage::TypeLabel, subjects, payload);
                }
            }
        }
        board
    }

    fn push(
        &mut self,
        state: &PipelineState,
        cfg: &QuotaConfig,
        kind: Stage,
        subject_ids: Vec<String>,
        payload: Value,
    ) {
        let id = task_id(kind, &subject_ids);
        let annotators: Vec<String> =
            state.index.annotators(kind, &subject_ids).into_iter().map(str::to_string).collect();
        let required = if is_double_annotated(&id, cfg.double_rate) { 2 } else { 1 };
        let status = if annotators.len() >= required {
            TaskStatus::Done
        } else if annotators.is_empty() && self.skipped_by.contains_key(&id) {
            TaskStatus::Skipped
        } else {
            TaskStatus::Open
        };
        self.by_id.insert(id.clone(), self.tasks.len());
        self.tasks.push(Task { id, kind, subject_ids, payload, status, assigned_to: None, annotators, required });
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn get(&self, id: &str) -> Option<&Task> {
        self.by_id.get(id).map(|i| &self.tasks[*i])
    }

    pub fn has_judged(&self, task: &Task, annotator: &str) -> bool {
        task.annotators.iter().any(|a| a == annotator)
            || self.skipped_by.get(&task.id).is_some_and(|s| s.contains(annotator))
    }

    /// Whether the annotator may take this task: it still needs judgments and
    /// they have not judged or skipped it.
    pub fn available_to(&self, task: &Task, annotator: &str) -> bool {
        task.status != TaskStatus::Done && !self.has_judged(task, annotator)
    }

    /// First task of the given kind the annotator may take, in board order,
    /// preferring one already claimed by them and never one claimed by
    /// someone else.
    pub fn next_for(&self, annotator: &str, kind: Option<Stage>, claims: &HashMap<String, String>) -> Option<&Task> {
        let candidates = || {
            self.tasks
                .iter()
                .filter(move |t| kind.is_none_or(|k| t.kind == k))
                .filter(move |t| self.available_to(t, annotator))
        };
        candidates()
            .find(|t| claims.get(&t.id).is_some_and(|a| a == annotator))
            .or_else(|| candidates().find(|t| !claims.contains_key(&t.id)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_rate_is_close_to_target() {
        let hits = (0..10_000).filter(|i| is_double_annotated(&format!("RelevanceTriage:c{i}"), 0.2)).count();
        assert!((1800..2200).contains(&hits), "{hits}");
        assert!(!is_double_annotated("x", 0.0));
        assert!(is_double_annotated("x", 1.0001));
    }

    #[test]
    fn task_ids() {
        assert_eq!(task_id(Stage::TheoryMatch, &["c#1".into(), "A".into()]), "TheoryMatch:c#1|A");
    }
}
