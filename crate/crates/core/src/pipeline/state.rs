use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{CQTypeLabel, JudgmentRecord, JudgmentValue, PipelineError, RelevanceLabel, Stage, SubjectKind, Validity};
use crate::corpus::{ArgumentInstance, Corpus};
use crate::llmgen::CandidateCQ;
use crate::schemes::{instantiate_cqs_with, InstantiatedCQ, Registry};

/// Key of one decision: the stage and what it is about.
pub type SubjectKey = (Stage, Vec<String>);

/// Records grouped by subject. The first annotator to judge a subject owns
/// its effective value (their latest record); other annotators' latest
/// records are kept for agreement.
#[derive(Debug, Default, Clone)]
pub struct JudgmentIndex {
    by_subject: BTreeMap<SubjectKey, Vec<(JudgmentRecord, JudgmentValue)>>,
}

impl JudgmentIndex {
    pub fn build(records: &[JudgmentRecord]) -> Result<JudgmentIndex, PipelineError> {
        let mut by_subject: BTreeMap<SubjectKey, Vec<(JudgmentRecord, JudgmentValue)>> = BTreeMap::new();
        for r in records {
            let v = r.decoded()?;
            if v.is_skip() {
                continue;
            }
            by_subject.entry((r.stage, r.subject_ids.clone())).or_default().push((r.clone(), v));
        }
        Ok(JudgmentIndex { by_subject })
    }

    pub fn primary_annotator(&self, stage: Stage, subjects: &[String]) -> Option<&str> {
        self.by_subject.get(&(stage, subjects.to_vec())).map(|v| v[0].0.annotator.as_str())
    }

    /// Latest record of the given annotator for a subject.
    pub fn latest_by(
        &self,
        stage: Stage,
        subjects: &[String],
        annotator: &str,
    ) -> Option<&(JudgmentRecord, JudgmentValue)> {
        self.by_subject.get(&(stage, subjects.to_vec()))?.iter().rev().find(|(r, _)| r.annotator == annotator)
    }

    pub fn effective(&self, stage: Stage, subjects: &[String]) -> Option<&JudgmentValue> {
        let primary = self.primary_annotator(stage, subjects)?;
        self.latest_by(stage, subjects, primary).map(|(_, v)| v)
    }

    pub fn annotators(&self, stage: Stage, subjects: &[String]) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for (r, _) in self.by_subject.get(&(stage, subjects.to_vec())).into_iter().flatten() {
            if !out.contains(&r.annotator.as_str()) {
                out.push(&r.annotator);
            }
        }
        out
    }

    pub fn subjects(&self, stage: Stage) -> impl Iterator<Item = &Vec<String>> {
        self.by_subject.keys().filter(move |(s, _)| *s == stage).map(|(_, ids)| ids)
    }

    pub fn keys(&self) -> impl Iterator<Item = &SubjectKey> {
        self.by_subject.keys()
    }

    pub fn is_empty(&self) -> bool {
        self.by_subject.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OutcomeGroup {
    NotRelevant,
    NoArgument,
    TheoryMatched,
    NovelCandidate,
    NovelValid,
    NovelInvalid,
}

/// Everything decided so far about one candidate.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CQState {
    pub candidate_id: String,
    pub relevance: Option<RelevanceLabel>,
    /// `None` until the argument-matching judgment exists.
    pub argument_matches: Option<Vec<String>>,
    /// Per matched argument, the theory-CQ ids judged equivalent. An argument
    /// is present once its theory-matching judgment exists.
    pub theory_matches: BTreeMap<String, Vec<String>>,
    pub validity: BTreeMap<String, Validity>,
}

impl CQState {
    pub fn matched_arguments(&self) -> &[String] {
        self.argument_matches.as_deref().unwrap_or(&[])
    }

    /// (argument, theory-CQ) pairs.
    pub fn theory_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.theory_matches.iter().flat_map(|(a, cqs)| cqs.iter().map(move |c| (a.as_str(), c.as_str())))
    }

    /// Matched arguments with no matching theory-CQ; these need a validity
    /// verdict.
    pub fn novel_arguments(&self) -> impl Iterator<Item = &str> {
        self.matched_arguments()
            .iter()
            .filter(|a| self.theory_matches.get(*a).is_some_and(|m| m.is_empty()))
            .map(String::as_str)
    }

    pub fn has_theory_match(&self, argument: &str) -> bool {
        self.theory_matches.get(argument).is_some_and(|m| !m.is_empty())
    }
}

pub fn classify(state: &CQState) -> Result<OutcomeGroup, PipelineError> {
    let order = |missing: Stage| PipelineError::StageOrder { candidate: state.candidate_id.clone(), missing };
    match state.relevance {
        None => return Err(order(Stage::RelevanceTriage)),
        Some(RelevanceLabel::Relevant) => {}
        Some(_) => return Ok(OutcomeGroup::NotRelevant),
    }
    let args = state.argument_matches.as_ref().ok_or_else(|| order(Stage::ArgumentMatch))?;
    if args.is_empty() {
        return Ok(OutcomeGroup::NoArgument);
    }
    if args.iter().any(|a| !state.theory_matches.contains_key(a)) {
        return Err(order(Stage::TheoryMatch));
    }
    if args.iter().any(|a| state.has_theory_match(a)) {
        return Ok(OutcomeGroup::TheoryMatched);
    }
    let verdicts: Vec<Option<Validity>> = args.iter().map(|a| state.validity.get(a).copied()).collect();
    Ok(if verdicts.contains(&Some(Validity::Valid)) {
        OutcomeGroup::NovelValid
    } else if verdicts.iter().all(Option::is_some) {
        OutcomeGroup::NovelInvalid
    } else {
        OutcomeGroup::NovelCandidate
    })
}

/// The pipeline's view of a project: the log folded over corpus and
/// candidates.
#[derive(Debug, Clone)]
pub struct PipelineState {
    pub corpus: Corpus,
    /// Arguments with bindings and discards from the log applied.
    pub arguments: Vec<ArgumentInstance>,
    /// Theory-CQs of every non-discarded argument that has bindings, with
    /// post-edits and question discards applied.
    pub theory_cqs: Vec<InstantiatedCQ>,
    pub candidates: Vec<CandidateCQ>,
    pub states: Vec<CQState>,
    pub theory_types: BTreeMap<String, CQTypeLabel>,
    /// Type of an llm-CQ in relation to an argument.
    pub pair_types: BTreeMap<(String, String), CQTypeLabel>,
    pub index: JudgmentIndex,
}

impl PipelineState {
    pub fn fold(
        corpus: &Corpus,
        registry: &Registry,
        candidates: Vec<CandidateCQ>,
        records: &[JudgmentRecord],
    ) -> Result<PipelineState, PipelineError> {
        let index = JudgmentIndex::build(records)?;
        let cand_pos: HashMap<&str, usize> = candidates.iter().enumerate().map(|(i, c)| (c.id.as_str(), i)).collect();

        let mut arguments = corpus.arguments.clone();
        let mut theory_cqs = Vec::new();
        for arg in &mut arguments {
            match index.effective(Stage::FillVariables, std::slice::from_ref(&arg.id)) {
                Some(JudgmentValue::Bindings(b)) => arg.bindings = b.clone(),
                Some(JudgmentValue::Discard(reason)) => {
                    arg.discarded = true;
                    arg.discard_reason = Some(reason.clone());
                }
                _ => {}
            }
            if arg.discarded || arg.bindings.is_empty() {
                continue;
            }
            for mut cq in instantiate_cqs_with(registry, arg)? {
                match index.effective(Stage::PostEdit, std::slice::from_ref(&cq.id)) {
                    Some(JudgmentValue::Edit(text)) => cq.postedit_text = Some(text.clone()),
                    Some(JudgmentValue::Discard(reason)) => {
                        cq.discarded = true;
                        cq.discard_reason = Some(reason.clone());
                    }
                    _ => {}
                }
                theory_cqs.push(cq);
            }
        }

        let arg_ids: HashMap<&str, &ArgumentInstance> = arguments.iter().map(|a| (a.id.as_str(), a)).collect();
        let cq_ids: HashMap<&str, &InstantiatedCQ> = theory_cqs.iter().map(|c| (c.id.as_str(), c)).collect();

        let mut states: Vec<CQState> =
            candidates.iter().map(|c| CQState { candidate_id: c.id.clone(), ..CQState::default() }).collect();
        let mut theory_types = BTreeMap::new();
        let mut pair_types = BTreeMap::new();

        let unknown = |stage: Stage, id: &str| PipelineError::UnknownSubject { stage, id: id.to_string() };
        for (stage, subjects) in index.keys() {
            let value = index.effective(*stage, subjects).expect("indexed subject has a value");
            let kind = super::check_subjects(*stage, subjects)?;
            let cand = |id: &str| cand_pos.get(id).copied().ok_or_else(|| unknown(*stage, id));
            let arg_of = |cand_idx: usize, id: &str| -> Result<(), PipelineError> {
                let a = arg_ids.get(id).ok_or_else(|| unknown(*stage, id))?;
                if a.intervention_id != candidates[cand_idx].intervention_id {
                    return Err(PipelineError::Invalid(format!(
                        "argument {id} is not in the intervention of candidate {}",
                        candidates[cand_idx].id
                    )));
                }
                Ok(())
            };
            match (kind, value) {
                (SubjectKind::Argument, _) => {
                    arg_ids.get(subjects[0].as_str()).ok_or_else(|| unknown(*stage, &subjects[0]))?;
                }
                (SubjectKind::TheoryCq, JudgmentValue::Type(t)) => {
                    cq_ids.get(subjects[0].as_str()).ok_or_else(|| unknown(*stage, &subjects[0]))?;
                    theory_types.insert(subjects[0].clone(), *t);
                }
                (SubjectKind::TheoryCq, _) => {
                    cq_ids.get(subjects[0].as_str()).ok_or_else(|| unknown(*stage, &subjects[0]))?;
                }
                (SubjectKind::Candidate, JudgmentValue::Relevance(l)) => {
                    states[cand(&subjects[0])?].relevance = Some(*l)
                }
                (SubjectKind::Candidate, JudgmentValue::Arguments(args)) => {
                    let i = cand(&subjects[0])?;
                    for a in args {
                        arg_of(i, a)?;
                    }
                    states[i].argument_matches = Some(args.clone());
                }
                (SubjectKind::CandidateArgument, v) => {
                    let i = cand(&subjects[0])?;
                    let a = &subjects[1];
                    arg_of(i, a)?;
                    match v {
                        JudgmentValue::TheoryCqs(cqs) => {
                            for c in cqs {
                                let cq = cq_ids.get(c.as_str()).ok_or_else(|| unknown(*stage, c))?;
                                if cq.argument_id != *a {
                                    return Err(PipelineError::Invalid(format!(
                                        "theory-CQ {c} does not belong to {a}"
                                    )));
                                }
                            }
                            states[i].theory_matches.insert(a.clone(), cqs.clone());
                        }
                        JudgmentValue::Validity(v) => {
                            states[i].validity.insert(a.clone(), *v);
                        }
                        JudgmentValue::Type(t) => {
                            pair_types.insert((subjects[0].clone(), a.clone()), *t);
                        }
                        _ => unreachable!("decoded value matches stage"),
                    }
                }
                _ => unreachable!("decoded value matches stage"),
            }
        }

        // Judgments made on a path that was later revised stay in the log but
        // do not count.
        for s in &mut states {
            if s.relevance != Some(RelevanceLabel::Relevant) {
                s.argument_matches = None;
            }
            let matched: BTreeSet<String> = s.matched_arguments().iter().cloned().collect();
            s.theory_matches.retain(|a, _| matched.contains(a));
            let novel: BTreeSet<String> = s.novel_arguments().map(str::to_string).collect();
            s.validity.retain(|a, _| novel.contains(a));
        }

        Ok(PipelineState {
            corpus: corpus.clone(),
            arguments,
            theory_cqs,
            candidates,
            states,
            theory_types,
            pair_types,
            index,
        })
    }

    pub fn candidate(&self, id: &str) -> Option<(&CandidateCQ, &CQState)> {
        let i = self.candidates.iter().position(|c| c.id == id)?;
        Some((&self.candidates[i], &self.states[i]))
    }

    pub fn argument(&self, id: &str) -> Option<&ArgumentInstance> {
        self.arguments.iter().find(|a| a.id == id)
    }

    pub fn theory_cq(&self, id: &str) -> Option<&InstantiatedCQ> {
        self.theory_cqs.iter().find(|c| c.id == id)
    }

    /// Theory-CQs that reach the dataset.
    pub fn final_theory_cqs(&self) -> impl Iterator<Item = &InstantiatedCQ> {
        self.theory_cqs.iter().filter(|c| !c.discarded)
    }

    pub fn live_arguments(&self) -> impl Iterator<Item = &ArgumentInstance> {
        self.arguments.iter().filter(|a| !a.discarded)
    }

    pub fn classify_all(&self) -> Vec<Result<OutcomeGroup, PipelineError>> {
        self.states.iter().map(classify).collect()
    }
}
