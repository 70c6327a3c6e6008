use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::report::{check_complete, pct, render_table};
use super::{PipelineError, PipelineState, Validity};
use crate::corpus::{SchemeId, SourceDataset};
use crate::llmgen::{join_propositions, PromptKind};

/// Written into every exported record.
pub const DATASET_FORMAT: &str = "cqgen-dataset/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoryCqEntry {
    pub id: String,
    pub argument_id: String,
    pub scheme: SchemeId,
    pub template_index: usize,
    pub text: String,
    pub post_edited: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmOrigin {
    TheoryMatch,
    NovelValid,
}

/// Why an llm-CQ is valid for one argument.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmLink {
    pub argument_id: String,
    pub origin: LlmOrigin,
    /// Matched theory-CQ ids, empty for novel questions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub matched_theory: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub matched_template_index: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmCqEntry {
    pub candidate_id: String,
    pub text: String,
    pub model: String,
    pub prompt: PromptKind,
    /// Other candidates with the same normalized text.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub duplicates: Vec<String>,
    pub links: Vec<LlmLink>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub format: String,
    pub intervention_id: String,
    pub speaker: String,
    pub source_dataset: SourceDataset,
    pub intervention_text: String,
    pub theory_cqs: Vec<TheoryCqEntry>,
    pub llm_cqs: Vec<LlmCqEntry>,
}

/// A relevant candidate that matched no annotated argument. Kept apart from
/// the dataset; some may be valid for arguments nobody annotated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoArgumentRecord {
    pub candidate_id: String,
    pub intervention_id: String,
    pub text: String,
    pub model: String,
    pub prompt: PromptKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub interventions: usize,
    pub theory_cqs: usize,
    pub llm_pairs: usize,
    pub llm_unique: usize,
    pub candidates: usize,
    pub unique_valid_pct: f64,
}

impl DatasetSummary {
    pub fn records(&self) -> String {
        crate::jsonl::to_string(std::slice::from_ref(self))
    }

    pub fn table(&self) -> String {
        let rows = vec![
            vec!["interventions".into(), self.interventions.to_string()],
            vec!["theory-CQs".into(), self.theory_cqs.to_string()],
            vec!["valid llm-CQ pairs".into(), self.llm_pairs.to_string()],
            vec!["unique valid llm-CQs".into(), self.llm_unique.to_string()],
            vec![
                "unique valid of all candidates".into(),
                format!("{} of {} ({:.0}%)", self.llm_unique, self.candidates, self.unique_valid_pct),
            ],
        ];
        render_table(&["Measure", "Count"], &rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub entries: Vec<DatasetEntry>,
    pub no_argument: Vec<NoArgumentRecord>,
    pub summary: DatasetSummary,
}

/// Builds one entry per intervention with at least one non-discarded
/// argument, in corpus order.
pub fn assemble_dataset(state: &PipelineState) -> Result<Dataset, PipelineError> {
    check_complete(state)?;
    let mut entries = Vec::new();
    let mut no_argument = Vec::new();
    let mut llm_pairs = 0;
    let mut unique = BTreeSet::new();
    for iv in &state.corpus.interventions {
        let live: Vec<&str> =
            state.live_arguments().filter(|a| a.intervention_id == iv.id).map(|a| a.id.as_str()).collect();
        let theory_cqs: Vec<TheoryCqEntry> = state
            .final_theory_cqs()
            .filter(|c| live.contains(&c.argument_id.as_str()))
            .map(|c| TheoryCqEntry {
                id: c.id.clone(),
                argument_id: c.argument_id.clone(),
                scheme: c.scheme,
                template_index: c.template_index,
                text: c.final_text().to_string(),
                post_edited: c.postedit_text.is_some(),
            })
            .collect();

        let mut llm_cqs: Vec<LlmCqEntry> = Vec::new();
        for (c, s) in state.candidates.iter().zip(&state.states) {
            if c.intervention_id != iv.id {
                continue;
            }
            if s.argument_matches.as_ref().is_some_and(|m| m.is_empty()) {
                no_argument.push(NoArgumentRecord {
                    candidate_id: c.id.clone(),
                    intervention_id: c.intervention_id.clone(),
                    text: c.text.clone(),
                    model: c.model_name.clone(),
                    prompt: c.prompt_kind,
                });
            }
            let mut links = Vec::new();
            for a in s.matched_arguments() {
                if s.has_theory_match(a) {
                    let cqs = s.theory_matches[a].clone();
                    let idx = cqs.iter().filter_map(|id| state.theory_cq(id)).map(|q| q.template_index).collect();
                    links.push(LlmLink {
                        argument_id: a.clone(),
                        origin: LlmOrigin::TheoryMatch,
                        matched_theory: cqs,
                        matched_template_index: idx,
                    });
                } else if s.validity.get(a) == Some(&Validity::Valid) {
                    links.push(LlmLink {
                        argument_id: a.clone(),
                        origin: LlmOrigin::NovelValid,
                        matched_theory: vec![],
                        matched_template_index: vec![],
                    });
                }
            }
            if links.is_empty() {
                continue;
            }
            llm_pairs += links.len();
            unique.insert(c.root().to_string());
            match llm_cqs.iter_mut().find(|e| e.candidate_id == c.root()) {
                Some(e) => {
                    e.duplicates.push(c.id.clone());
                    for l in links {
                        if !e.links.contains(&l) {
                            e.links.push(l);
                        }
                    }
                }
                None => llm_cqs.push(LlmCqEntry {
                    candidate_id: c.root().to_string(),
                    text: c.text.clone(),
                    model: c.model_name.clone(),
                    prompt: c.prompt_kind,
                    duplicates: vec![],
                    links,
                }),
            }
        }
        if live.is_empty() {
            continue;
        }
        entries.push(DatasetEntry {
            format: DATASET_FORMAT.to_string(),
            intervention_id: iv.id.clone(),
            speaker: iv.speaker.clone(),
            source_dataset: iv.source_dataset,
            intervention_text: join_propositions(&iv.propositions),
            theory_cqs,
            llm_cqs,
        });
    }
    let theory = state.final_theory_cqs().count();
    let summary = DatasetSummary {
        interventions: entries.len(),
        theory_cqs: theory,
        llm_pairs,
        llm_unique: unique.len(),
        candidates: state.candidates.len(),
        unique_valid_pct: pct(unique.len(), state.candidates.len()),
    };
    Ok(Dataset { entries, no_argument, summary })
}
