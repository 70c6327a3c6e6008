use std::collections::BTreeSet;

use crate::llmgen::normalize;
use crate::schemes::InstantiatedCQ;

fn tokens(text: &str) -> BTreeSet<String> {
    normalize(text)
        .split(|c: char| !c.is_alphanumeric() && c != '\'')
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn jaccard(a: &str, b: &str) -> f64 {
    let (ta, tb) = (tokens(a), tokens(b));
    let union = ta.union(&tb).count();
    if union == 0 {
        return 0.0;
    }
    ta.intersection(&tb).count() as f64 / union as f64
}

/// Theory-CQs ordered by token overlap with `candidate`, best first. Ties keep
/// template order. Only an aid for the annotator; nothing is accepted
/// automatically.
pub fn rank_theory_matches<'a>(candidate: &str, theory: &'a [InstantiatedCQ]) -> Vec<(&'a InstantiatedCQ, f64)> {
    let mut scored: Vec<(&InstantiatedCQ, f64)> =
        theory.iter().map(|t| (t, jaccard(candidate, t.final_text()))).collect();
    scored.sort_by(|x, y| y.1.total_cmp(&x.1));
    scored
}
