use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{CQTypeLabel, PipelineError, PipelineState, RelevanceLabel, Stage, Validity};
use crate::llmgen::PromptKind;

/// Percentage of `part` in `whole`, rounded to two decimals; 0 when empty.
pub fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        return 0.0;
    }
    (part as f64 * 10000.0 / whole as f64).round() / 100.0
}

fn incomplete(stage: Stage, ids: Vec<String>) -> Result<(), PipelineError> {
    if ids.is_empty() {
        Ok(())
    } else {
        Err(PipelineError::Incomplete { stage, ids })
    }
}

/// Renders rows as a left-aligned text table with a header rule.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (i, cell) in r.iter().enumerate() {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let padded: Vec<String> = cells.iter().enumerate().map(|(i, c)| format!("{:<w$}", c, w = widths[i])).collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

fn fmt_pct(p: f64) -> String {
    format!("{p:.2}%")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceRow {
    pub model: String,
    /// `q`, `dq`, or `all`.
    pub prompt: String,
    pub counts: BTreeMap<RelevanceLabel, usize>,
    pub percentages: BTreeMap<RelevanceLabel, f64>,
    pub total: usize,
}

impl RelevanceRow {
    fn new(model: &str, prompt: &str, counts: BTreeMap<RelevanceLabel, usize>) -> RelevanceRow {
        let total = counts.values().sum();
        let percentages = counts.iter().map(|(l, n)| (*l, pct(*n, total))).collect();
        RelevanceRow { model: model.to_string(), prompt: prompt.to_string(), counts, percentages, total }
    }

    pub fn count(&self, label: RelevanceLabel) -> usize {
        self.counts.get(&label).copied().unwrap_or(0)
    }

    pub fn percentage(&self, label: RelevanceLabel) -> f64 {
        self.percentages.get(&label).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceReport {
    pub rows: Vec<RelevanceRow>,
    pub all: RelevanceRow,
}

impl RelevanceReport {
    pub fn row(&self, model: &str, kind: PromptKind) -> Option<&RelevanceRow> {
        self.rows.iter().find(|r| r.model == model && r.prompt == kind.code())
    }

    pub fn records(&self) -> String {
        let rows: Vec<&RelevanceRow> = self.rows.iter().chain(std::iter::once(&self.all)).collect();
        crate::jsonl::to_string(&rows)
    }

    pub fn table(&self) -> String {
        let header = ["Model", "Prompt", "Relevant", "NewConcept", "BadReasoning", "NonSpecific", "Other", "Total"];
        let mut rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut cells = vec![r.model.clone(), r.prompt.clone()];
                cells.extend(RelevanceLabel::ALL.iter().map(|l| fmt_pct(r.percentage(*l))));
                cells.push(r.total.to_string());
                cells
            })
            .collect();
        let mut all = vec!["All".to_string(), "all".to_string()];
        all.extend(RelevanceLabel::ALL.iter().map(|l| self.all.count(*l).to_string()));
        all.push(self.all.total.to_string());
        rows.push(all);
        render_table(&header, &rows)
    }
}

/// One row per (model, prompt): prompt kinds in fixed order, models in order
/// of first appearance among the candidates.
pub fn relevance_report(state: &PipelineState) -> Result<RelevanceReport, PipelineError> {
    let missing: Vec<String> =
        state.states.iter().filter(|s| s.relevance.is_none()).map(|s| s.candidate_id.clone()).collect();
    incomplete(Stage::RelevanceTriage, missing)?;

    let mut models: Vec<&str> = Vec::new();
    for c in &state.candidates {
        if !models.contains(&c.model_name.as_str()) {
            models.push(&c.model_name);
        }
    }
    let zero = || RelevanceLabel::ALL.iter().map(|l| (*l, 0usize)).collect::<BTreeMap<_, _>>();
    let mut rows = Vec::new();
    let mut all = zero();
    for kind in PromptKind::ALL {
        for model in &models {
            let mut counts = zero();
            let mut any = false;
            for (c, s) in state.candidates.iter().zip(&state.states) {
                if c.prompt_kind == kind && c.model_name == *model {
                    let l = s.relevance.expect("checked above");
                    *counts.get_mut(&l).unwrap() += 1;
                    *all.get_mut(&l).unwrap() += 1;
                    any = true;
                }
            }
            if any {
                rows.push(RelevanceRow::new(model, kind.code(), counts));
            }
        }
    }
    Ok(RelevanceReport { rows, all: RelevanceRow::new("All", "all", all) })
}

fn check_matching(state: &PipelineState) -> Result<(), PipelineError> {
    relevance_report(state)?;
    let missing: Vec<String> = state
        .states
        .iter()
        .filter(|s| s.relevance == Some(RelevanceLabel::Relevant) && s.argument_matches.is_none())
        .map(|s| s.candidate_id.clone())
        .collect();
    incomplete(Stage::ArgumentMatch, missing)?;
    let missing: Vec<String> = state
        .states
        .iter()
        .flat_map(|s| {
            s.matched_arguments()
                .iter()
                .filter(|a| !s.theory_matches.contains_key(*a))
                .map(move |a| format!("{}|{a}", s.candidate_id))
        })
        .collect();
    incomplete(Stage::TheoryMatch, missing)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingReport {
    pub unique_matched: usize,
    pub pairs: usize,
    pub arguments_covered: usize,
    pub arguments_total: usize,
    pub theory_unique: usize,
    pub theory_pairs: usize,
}

impl MatchingReport {
    pub fn records(&self) -> String {
        crate::jsonl::to_string(std::slice::from_ref(self))
    }

    pub fn table(&self) -> String {
        let rows = vec![
            vec!["unique llm-CQs matched to an argument".into(), self.unique_matched.to_string()],
            vec!["llm-CQ/argument pairs".into(), self.pairs.to_string()],
            vec!["arguments covered".into(), format!("{} of {}", self.arguments_covered, self.arguments_total)],
            vec!["unique llm-CQs matching a theory-CQ".into(), self.theory_unique.to_string()],
            vec!["llm-CQ/theory-CQ pairs".into(), self.theory_pairs.to_string()],
        ];
        render_table(&["Measure", "Count"], &rows)
    }
}

pub fn matching_report(state: &PipelineState) -> Result<MatchingReport, PipelineError> {
    check_matching(state)?;
    let mut matched_roots = BTreeSet::new();
    let mut theory_roots = BTreeSet::new();
    let mut covered = BTreeSet::new();
    let mut pairs = 0;
    let mut theory_pairs = 0;
    for (c, s) in state.candidates.iter().zip(&state.states) {
        let args = s.matched_arguments();
        if args.is_empty() {
            continue;
        }
        matched_roots.insert(c.root());
        pairs += args.len();
        covered.extend(args.iter().map(String::as_str));
        let t = s.theory_pairs().count();
        if t > 0 {
            theory_roots.insert(c.root());
            theory_pairs += t;
        }
    }
    let live: BTreeSet<&str> = state.live_arguments().map(|a| a.id.as_str()).collect();
    Ok(MatchingReport {
        unique_matched: matched_roots.len(),
        pairs,
        arguments_covered: covered.intersection(&live).count(),
        arguments_total: live.len(),
        theory_unique: theory_roots.len(),
        theory_pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub judged: usize,
    pub valid: usize,
    pub invalid: usize,
    pub valid_pct: f64,
}

impl ValidityReport {
    pub fn records(&self) -> String {
        crate::jsonl::to_string(std::slice::from_ref(self))
    }

    pub fn table(&self) -> String {
        let rows = vec![
            vec!["pairs judged".into(), self.judged.to_string()],
            vec!["valid".into(), format!("{} ({})", self.valid, fmt_pct(self.valid_pct))],
            vec!["invalid".into(), self.invalid.to_string()],
        ];
        render_table(&["Measure", "Count"], &rows)
    }
}

fn check_validity(state: &PipelineState) -> Result<(), PipelineError> {
    check_matching(state)?;
    let missing: Vec<String> = state
        .states
        .iter()
        .flat_map(|s| {
            s.novel_arguments().filter(|a| !s.validity.contains_key(*a)).map(move |a| format!("{}|{a}", s.candidate_id))
        })
        .collect();
    incomplete(Stage::ValidityJudgment, missing)
}

pub fn validity_report(state: &PipelineState) -> Result<ValidityReport, PipelineError> {
    check_validity(state)?;
    let verdicts: Vec<Validity> = state.states.iter().flat_map(|s| s.validity.values().copied()).collect();
    let valid = verdicts.iter().filter(|v| **v == Validity::Valid).count();
    Ok(ValidityReport {
        judged: verdicts.len(),
        valid,
        invalid: verdicts.len() - valid,
        valid_pct: pct(valid, verdicts.len()),
    })
}

/// Checks every stage needed for the final dataset.
pub(crate) fn check_complete(state: &PipelineState) -> Result<(), PipelineError> {
    let missing: Vec<String> =
        state.arguments.iter().filter(|a| !a.discarded && a.bindings.is_empty()).map(|a| a.id.clone()).collect();
    incomplete(Stage::FillVariables, missing)?;
    let missing: Vec<String> = state
        .theory_cqs
        .iter()
        .filter(|c| state.index.effective(Stage::PostEdit, std::slice::from_ref(&c.id)).is_none())
        .map(|c| c.id.clone())
        .collect();
    incomplete(Stage::PostEdit, missing)?;
    check_validity(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeRow {
    #[serde(rename = "type")]
    pub label: CQTypeLabel,
    pub theory: usize,
    pub theory_pct: f64,
    pub llm: usize,
    pub llm_pct: f64,
    pub matched: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeReport {
    pub rows: Vec<TypeRow>,
    pub theory_total: usize,
    pub llm_total: usize,
    /// Number of llm-CQ/theory-CQ pairs. A pair whose two questions carry
    /// different types counts once under each type, so the matched column
    /// can sum to more than this.
    pub matched_total: usize,
}

impl TypeReport {
    pub fn row(&self, label: CQTypeLabel) -> &TypeRow {
        self.rows.iter().find(|r| r.label == label).expect("every label has a row")
    }

    pub fn records(&self) -> String {
        #[derive(Serialize)]
        struct Total {
            #[serde(rename = "type")]
            label: &'static str,
            theory: usize,
            llm: usize,
            matched: usize,
        }
        let mut out = crate::jsonl::to_string(&self.rows);
        out.push_str(&crate::jsonl::to_string(&[Total {
            label: "total",
            theory: self.theory_total,
            llm: self.llm_total,
            matched: self.matched_total,
        }]));
        out
    }

    pub fn table(&self) -> String {
        let mut rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.label.as_str().to_string(),
                    r.theory.to_string(),
                    format!("{:.2}", r.theory_pct),
                    r.llm.to_string(),
                    format!("{:.2}", r.llm_pct),
                    r.matched.to_string(),
                ]
            })
            .collect();
        rows.push(vec![
            "Total".into(),
            self.theory_total.to_string(),
            String::new(),
            self.llm_total.to_string(),
            String::new(),
            self.matched_total.to_string(),
        ]);
        render_table(&["Type", "theory-CQs", "%", "llm-CQs", "%", "matching"], &rows)
    }
}

pub fn type_report(state: &PipelineState) -> Result<TypeReport, PipelineError> {
    check_complete(state)?;
    let mut theory: BTreeMap<CQTypeLabel, usize> = BTreeMap::new();
    let mut missing = Vec::new();
    let mut theory_total = 0;
    for cq in state.final_theory_cqs() {
        theory_total += 1;
        match state.theory_types.get(&cq.id) {
            Some(t) => *theory.entry(*t).or_default() += 1,
            None => missing.push(cq.id.clone()),
        }
    }
    let mut llm: BTreeMap<CQTypeLabel, usize> = BTreeMap::new();
    let mut matched: BTreeMap<CQTypeLabel, usize> = BTreeMap::new();
    let mut llm_total = 0;
    let mut matched_total = 0;
    for s in &state.states {
        for a in s.matched_arguments() {
            let counted = s.has_theory_match(a) || s.validity.get(a) == Some(&Validity::Valid);
            if !counted {
                continue;
            }
            llm_total += 1;
            let key = (s.candidate_id.clone(), a.clone());
            let Some(t) = state.pair_types.get(&key) else {
                missing.push(format!("{}|{a}", s.candidate_id));
                continue;
            };
            *llm.entry(*t).or_default() += 1;
            for cq in s.theory_matches.get(a).into_iter().flatten() {
                matched_total += 1;
                let mut types = BTreeSet::from([*t]);
                match state.theory_types.get(cq) {
                    Some(tt) => {
                        types.insert(*tt);
                    }
                    None => missing.push(cq.clone()),
                }
                for ty in types {
                    *matched.entry(ty).or_default() += 1;
                }
            }
        }
    }
    missing.sort();
    missing.dedup();
    incomplete(Stage::TypeLabel, missing)?;
    let get = |m: &BTreeMap<CQTypeLabel, usize>, l| m.get(&l).copied().unwrap_or(0);
    let rows = CQTypeLabel::ALL
        .iter()
        .map(|l| TypeRow {
            label: *l,
            theory: get(&theory, *l),
            theory_pct: pct(get(&theory, *l), theory_total),
            llm: get(&llm, *l),
            llm_pct: pct(get(&llm, *l), llm_total),
            matched: get(&matched, *l),
        })
        .collect();
    Ok(TypeReport { rows, theory_total, llm_total, matched_total })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pct_rounds_to_two_decimals() {
        assert_eq!(pct(50, 74), 67.57);
        assert_eq!(pct(2, 74), 2.7);
        assert_eq!(pct(0, 0), 0.0);
        assert_eq!(pct(155, 242), 64.05);
    }

    #[test]
    fn table_alignment() {
        let t = render_table(&["a", "bb"], &[vec!["ccc".into(), "d".into()]]);
        assert_eq!(t, "a    bb\n---  --\nccc  d\n");
    }
}
