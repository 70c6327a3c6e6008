use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::{JudgmentIndex, JudgmentValue, PipelineError, Stage};
use crate::Exec;

/// Cohen's kappa between two equal-length labelings.
pub fn compute_agreement<T: Eq + Hash>(a: &[T], b: &[T]) -> Result<f64, PipelineError> {
    if a.len() != b.len() {
        return Err(PipelineError::Agreement(format!("label lists differ in length ({} vs {})", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(PipelineError::Agreement("label lists are empty".to_string()));
    }
    let n = a.len() as f64;
    let mut count_a: HashMap<&T, usize> = HashMap::new();
    let mut count_b: HashMap<&T, usize> = HashMap::new();
    let mut agree = 0usize;
    for (x, y) in a.iter().zip(b) {
        *count_a.entry(x).or_default() += 1;
        *count_b.entry(y).or_default() += 1;
        if x == y {
            agree += 1;
        }
    }
    let p_o = agree as f64 / n;
    let p_e: f64 =
        count_a.iter().map(|(k, ca)| *ca as f64 * count_b.get(k).copied().unwrap_or(0) as f64).sum::<f64>() / (n * n);
    if (1.0 - p_e).abs() < f64::EPSILON {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Kappa over many labelings, one result per pair of lists.
pub fn agreement_batch(pairs: &[(Vec<String>, Vec<String>)], exec: Exec) -> Vec<Result<f64, PipelineError>> {
    exec.map(pairs, |(a, b)| compute_agreement(a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageAgreement {
    pub stage: Stage,
    /// Number of doubly judged items. For variable filling an item is one
    /// variable slot of one argument.
    pub items: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

fn label_of(value: &JudgmentValue) -> String {
    match value {
        JudgmentValue::Bindings(_) => "bindings".to_string(),
        JudgmentValue::Discard(_) => "discard".to_string(),
        JudgmentValue::Keep => "keep".to_string(),
        JudgmentValue::Edit(t) => format!("edit:{}", normalize_fill(t)),
        JudgmentValue::Relevance(l) => format!("{l:?}"),
        JudgmentValue::Arguments(ids) | JudgmentValue::TheoryCqs(ids) => ids.join("|"),
        JudgmentValue::Validity(v) => format!("{v:?}"),
        JudgmentValue::Type(t) => t.as_str().to_string(),
        JudgmentValue::Skip(_) => "skip".to_string(),
    }
}

fn normalize_fill(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Paired labels (first annotator, second annotator) for one stage.
pub fn paired_labels(index: &JudgmentIndex, stage: Stage) -> (Vec<String>, Vec<String>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for subjects in index.subjects(stage) {
        let who = index.annotators(stage, subjects);
        if who.len() < 2 {
            continue;
        }
        let (Some((_, va)), Some((_, vb))) =
            (index.latest_by(stage, subjects, who[0]), index.latest_by(stage, subjects, who[1]))
        else {
            continue;
        };
        match (va, vb) {
            (JudgmentValue::Bindings(ba), JudgmentValue::Bindings(bb)) => {
                let slots: BTreeSet<_> = ba.keys().chain(bb.keys()).collect();
                for s in slots {
                    let get = |m: &std::collections::BTreeMap<_, String>| {
                        m.get(s).map(|t| normalize_fill(t)).unwrap_or_else(|| "<unbound>".to_string())
                    };
                    a.push(get(ba));
                    b.push(get(bb));
                }
            }
            _ => {
                a.push(label_of(va));
                b.push(label_of(vb));
            }
        }
    }
    (a, b)
}

pub fn stage_agreement(index: &JudgmentIndex) -> Vec<StageAgreement> {
    Stage::ALL
        .iter()
        .map(|stage| {
            let (a, b) = paired_labels(index, *stage);
            StageAgreement { stage: *stage, items: a.len(), kappa: compute_agreement(&a, &b).ok() }
        })
        .collect()
}
