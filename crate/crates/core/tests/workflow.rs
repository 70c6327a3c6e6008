//! Randomized end-to-end runs of the annotation engine on a slice of the
//! gold project.

mod common;

use common::gold;
use std::collections::BTreeSet;

use cqgen_core::annotation::{
    AnnotationEngine, AnnotationError, JudgmentLog, QuotaConfig, SubmitRequest, Task, TaskStatus,
};
use cqgen_core::corpus::Corpus;
use cqgen_core::pipeline::{assemble_dataset, JudgmentValue, PipelineState, RelevanceLabel, Stage};
use cqgen_core::project::Roster;
use cqgen_core::schemes::{registry, VariableSlot};
use cqgen_core::Exec;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const ANNOTATORS: [&str; 2] = ["ann1", "ann2"];

struct Slice {
    corpus: Corpus,
    candidates: Vec<cqgen_core::llmgen::CandidateCQ>,
}

fn slice(n: usize) -> Slice {
    let p = gold();
    let ivs: Vec<_> = p.corpus.interventions.iter().filter(|i| !i.arguments.is_empty()).take(n).cloned().collect();
    let keep = |id: &str| ivs.iter().any(|i| i.id == id);
    let arguments = p.corpus.arguments.iter().filter(|a| keep(&a.intervention_id)).cloned().collect();
    let candidates = p.candidates(Exec::Sequential).into_iter().filter(|c| keep(&c.intervention_id)).collect();
    Slice { corpus: Corpus { interventions: ivs, arguments }, candidates }
}

fn engine(s: &Slice, double_rate: f64, records: Vec<cqgen_core::pipeline::JudgmentRecord>) -> AnnotationEngine {
    AnnotationEngine::new(
        s.corpus.clone(),
        registry().clone(),
        s.candidates.clone(),
        Roster { annotators: ANNOTATORS.iter().map(|a| a.to_string()).collect() },
        QuotaConfig { double_rate },
        JudgmentLog::in_memory(records),
    )
    .unwrap()
}

fn ids(v: &Value) -> Vec<String> {
    v.as_array().map(|a| a.iter().map(|x| x["id"].as_str().unwrap().to_string()).collect()).unwrap_or_default()
}

fn subset(rng: &mut ChaCha8Rng, all: Vec<String>) -> Vec<String> {
    all.into_iter().filter(|_| rng.gen_bool(0.5)).collect()
}

fn pick(rng: &mut ChaCha8Rng, labels: &Value) -> Value {
    labels.as_array().unwrap().choose(rng).unwrap().clone()
}

/// A well-formed value for the task, built from what the payload offers.
fn answer(rng: &mut ChaCha8Rng, state: &PipelineState, task: &Task) -> Value {
    let p = &task.payload;
    match task.kind {
        Stage::FillVariables => {
            if rng.gen_bool(0.1) {
                return json!({"discard": "not an instance of the scheme"});
            }
            let scheme = state.argument(&task.subject_ids[0]).unwrap().scheme;
            let bindings: serde_json::Map<String, Value> = registry()
                .get(scheme)
                .slots()
                .into_iter()
                .map(|s| {
                    let v =
                        if s == VariableSlot::Neg { "" } else { ["the wall", "jobs", "taxes"].choose(rng).unwrap() };
                    (s.as_str().to_string(), json!(v))
                })
                .collect();
            json!({"bindings": bindings})
        }
        Stage::PostEdit => match rng.gen_range(0..5) {
            0 => json!({"discard": "ungrammatical"}),
            1 => json!({"edit": format!("Is {} really so?", task.subject_ids[0])}),
            _ => json!({"keep": true}),
        },
        // weighted towards Relevant so the later stages get exercised
        Stage::RelevanceTriage if rng.gen_bool(0.6) => json!(RelevanceLabel::Relevant),
        Stage::RelevanceTriage | Stage::TypeLabel => pick(rng, &p["labels"]),
        Stage::ArgumentMatch => json!(subset(rng, ids(&p["arguments"]))),
        Stage::TheoryMatch => json!(subset(rng, ids(&p["theory_cqs"]))),
        Stage::ValidityJudgment => json!(if rng.gen_bool(0.5) { "yes" } else { "no" }),
    }
}

/// The judgment an open task builds on, if it has one.
fn prerequisite_met(state: &PipelineState, task: &Task) -> bool {
    let s = &task.subject_ids;
    let eff = |stage, subjects: &[String]| state.index.effective(stage, subjects).cloned();
    let one = |id: &str| vec![id.to_string()];
    match (task.kind, s.len()) {
        (Stage::FillVariables, _) | (Stage::RelevanceTriage, _) => true,
        (Stage::PostEdit, _) => {
            let arg = &state.theory_cq(&s[0]).unwrap().argument_id;
            matches!(eff(Stage::FillVariables, &one(arg)), Some(JudgmentValue::Bindings(_)))
        }
        (Stage::TypeLabel, 1) => eff(Stage::PostEdit, &one(&s[0])).is_some(),
        (Stage::ArgumentMatch, _) => {
            eff(Stage::RelevanceTriage, &one(&s[0])) == Some(JudgmentValue::Relevance(RelevanceLabel::Relevant))
        }
        (Stage::TheoryMatch, _) => {
            let matched = matches!(eff(Stage::ArgumentMatch, &one(&s[0])), Some(JudgmentValue::Arguments(a)) if a.contains(&s[1]));
            let edited = state
                .theory_cqs
                .iter()
                .filter(|q| q.argument_id == s[1])
                .all(|q| eff(Stage::PostEdit, &one(&q.id)).is_some());
            matched && edited
        }
        (Stage::ValidityJudgment, _) => {
            matches!(eff(Stage::TheoryMatch, s), Some(JudgmentValue::TheoryCqs(q)) if q.is_empty())
        }
        (Stage::TypeLabel, _) => match eff(Stage::TheoryMatch, s) {
            Some(JudgmentValue::TheoryCqs(q)) if !q.is_empty() => true,
            Some(_) => eff(Stage::ValidityJudgment, s).is_some(),
            None => false,
        },
    }
}

fn simulate(seed: u64, double_rate: f64) -> BTreeSet<Stage> {
    let s = slice(3);
    let mut eng = engine(&s, double_rate, Vec::new());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idle = [false; 2];
    let mut checked_duplicate = false;
    let mut checked_maybe = false;
    let mut seen = BTreeSet::new();

    for step in 0.. {
        assert!(step < 5000, "seed {seed}: simulation does not converge");
        if idle.iter().all(|i| *i) {
            break;
        }
        let who = rng.gen_range(0..2);
        let annotator = ANNOTATORS[who];
        let Some(task) = eng.next_task(annotator, None).unwrap() else {
            idle[who] = true;
            continue;
        };
        idle = [false; 2];
        seen.insert(task.kind);
        assert_eq!(task.assigned_to.as_deref(), Some(annotator));
        assert!(prerequisite_met(eng.state(), &task), "seed {seed}: {} offered too early", task.id);

        let req = |value: Value| SubmitRequest {
            annotator: annotator.into(),
            stage: task.kind,
            subject_ids: task.subject_ids.clone(),
            value,
            task_id: Some(task.id.clone()),
        };
        if task.kind == Stage::ValidityJudgment && !checked_maybe {
            let err = eng.submit(req(json!("maybe"))).unwrap_err();
            assert!(matches!(err, AnnotationError::Validation(_)), "{err}");
            checked_maybe = true;
        }
        // only the first annotator skips, and only single-annotator tasks,
        // so the second can always pick the task up
        let value = if who == 0 && task.required == 1 && rng.gen_bool(0.05) {
            json!({"skip": "unsure"})
        } else {
            answer(&mut rng, eng.state(), &task)
        };
        let first = eng.submit(req(value.clone())).unwrap();
        assert!(!first.duplicate);
        if !checked_duplicate {
            let again = eng.submit(req(value)).unwrap();
            assert!(again.duplicate);
            assert_eq!(again.id, first.id);
            checked_duplicate = true;
        }

        for open in eng.tasks(None, Some(TaskStatus::Open)) {
            assert!(prerequisite_met(eng.state(), &open), "seed {seed}: {} open too early", open.id);
        }
    }

    let tasks = eng.tasks(None, None);
    let unfinished: Vec<&str> = tasks.iter().filter(|t| t.status != TaskStatus::Done).map(|t| t.id.as_str()).collect();
    assert!(unfinished.is_empty(), "seed {seed}: {unfinished:?}");
    for t in &tasks {
        assert_eq!(t.annotators.len(), t.required, "{}", t.id);
    }
    let dataset = assemble_dataset(eng.state()).unwrap();
    assert!(dataset.entries.iter().all(|e| !e.intervention_id.is_empty()));

    // the log alone reproduces the board
    let replay = engine(&s, double_rate, eng.records().to_vec());
    assert_eq!(replay.tasks(None, None), tasks);
    assert_eq!(replay.state().theory_cqs, eng.state().theory_cqs);
    assert_eq!(replay.state().states, eng.state().states);
    seen
}

#[test]
fn single_annotation_runs_to_completion() {
    let mut seen = BTreeSet::new();
    for seed in 0..3 {
        seen.extend(simulate(seed, 0.0));
    }
    assert_eq!(seen, Stage::ALL.into_iter().collect());
}

#[test]
fn double_annotation_runs_to_completion() {
    for seed in 100..102 {
        simulate(seed, 0.5);
    }
}

#[test]
fn unknown_annotators_and_foreign_claims_are_refused() {
    let s = slice(1);
    let mut eng = engine(&s, 0.0, Vec::new());
    assert!(matches!(eng.next_task("mallory", None), Err(AnnotationError::Auth(_))));
    let task = eng.next_task("ann1", Some(Stage::FillVariables)).unwrap().unwrap();
    let req = SubmitRequest {
        annotator: "ann2".into(),
        stage: task.kind,
        subject_ids: task.subject_ids.clone(),
        value: json!({"discard": "not an instance"}),
        task_id: None,
    };
    assert!(matches!(eng.submit(req), Err(AnnotationError::Conflict(_))));
    // nothing further down the chain is offered before the fill exists
    assert!(eng.tasks(Some(Stage::PostEdit), None).is_empty());
}
