//! Text heuristics that flag instantiated questions likely to need a manual
//! grammatical fix. Fills are substituted verbatim, so the usual breakage is
//! a clause dropped into a slot that expects a noun phrase or vice versa.

use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PosteditReason {
    DoubleNegation,
    /// "if to cut", "could to raise", "to to"
    InfinitiveMarker,
    /// "will cutting", "to cutting" in a clause position
    GerundMarker,
    NumberDisagreement,
    /// A sentence-initial capital carried into the middle of the question.
    InnerCapital,
    /// Sentence-final punctuation from the fill left inside the question.
    InnerTerminal,
}

struct Rules {
    infinitive: Regex,
    modal_to: Regex,
    doubled_to: Regex,
    gerund: Regex,
    number: Regex,
    capital: Regex,
    /// A capitalised pronoun or determiner right after another word.
    pronoun: Regex,
    terminal: Regex,
}

fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| Rules {
        infinitive: Regex::new(r#"(?i)\b(?:if|that|whether|then|of|than|with|about|from|by|achieve)\s+['"]?to\s+[a-z]"#)
            .unwrap(),
        modal_to: Regex::new(r"(?i)\b(?:could|can|will|would|should|might|must|does|did|is|are)\s+to\s+[a-z]").unwrap(),
        doubled_to: Regex::new(r"(?i)\bto\s+to\b").unwrap(),
        gerund: Regex::new(r"\b(?:will|would|can|could|should|might|must|does|did|[Ii]f)\s+(?:not\s+)?([a-z]+ing)\b")
            .unwrap(),
        number: Regex::new(
            r"(?i)\b(?:(?:they|we|you|i)\s+(?:is|was|has|does)|(?:he|she)\s+(?:are|were|have|do)|people\s+(?:is|was|has|does))\b",
        )
        .unwrap(),
        capital: Regex::new(
            r#"\b(?:that|if|then|whether|of|and|between|than|for|with|to)\s+['"]?(?:We|They|He|She|It|There|This|These|Those|Our|Their|You|My|His|Her|The|A|An)\b"#,
        )
        .unwrap(),
        pronoun: Regex::new(
            r#"\b[A-Za-z]+,?\s+['"“‘]?(?:We|They|He|She|It|There|This|These|Those|Our|Their|You|My|His|Her|Its)\b"#,
        )
        .unwrap(),
        terminal: Regex::new(r#"[a-z][.!]['"”’]?\s+[a-z]|[.!]['"”’]?\?|[a-z][.!]['"”’]?[,;:]"#).unwrap(),
    })
}

/// Words ending in "ing" that are not gerunds.
const NOT_GERUNDS: &[&str] = &[
    "thing",
    "nothing",
    "something",
    "anything",
    "everything",
    "bring",
    "king",
    "ring",
    "sing",
    "spring",
    "string",
    "during",
];

fn negation_positions(text: &str) -> Vec<usize> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '’'))
        .filter(|w| !w.is_empty())
        .enumerate()
        .filter(|(_, w)| {
            let w = w.to_lowercase();
            w == "not" || w == "never" || w.ends_with("n't") || w.ends_with("n’t")
        })
        .map(|(i, _)| i)
        .collect()
}

/// Every heuristic that fires on `text`, in a fixed order.
pub fn postedit_reasons(text: &str) -> Vec<PosteditReason> {
    let r = rules();
    let mut out = Vec::new();
    let neg = negation_positions(text);
    if neg.windows(2).any(|w| w[1] - w[0] <= 3) {
        out.push(PosteditReason::DoubleNegation);
    }
    if r.infinitive.is_match(text) || r.modal_to.is_match(text) || r.doubled_to.is_match(text) {
        out.push(PosteditReason::InfinitiveMarker);
    }
    let gerund = r.gerund.captures_iter(text).any(|c| {
        let w = c.get(1).unwrap().as_str();
        !NOT_GERUNDS.contains(&w)
    });
    if gerund {
        out.push(PosteditReason::GerundMarker);
    }
    if r.number.is_match(text) {
        out.push(PosteditReason::NumberDisagreement);
    }
    if r.capital.is_match(text) || r.pronoun.is_match(text) {
        out.push(PosteditReason::InnerCapital);
    }
    if r.terminal.is_match(text) {
        out.push(PosteditReason::InnerTerminal);
    }
    out
}

/// True when any heuristic in [`postedit_reasons`] fires.
pub fn postedit_flags(text: &str) -> bool {
    !postedit_reasons(text).is_empty()
}
