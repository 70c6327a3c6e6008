use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{GenerationRun, PromptKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateCQ {
    /// `<run id>#<k>`, k counting items from 1.
    pub id: String,
    pub text: String,
    pub intervention_id: String,
    pub model_name: String,
    pub prompt_kind: PromptKind,
    pub run_id: String,
    pub normalized: String,
    /// First candidate of the same intervention with the same normalized text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duplicate_of: Option<String>,
}

impl CandidateCQ {
    /// The id that stands for this candidate when counting unique questions.
    pub fn root(&self) -> &str {
        self.duplicate_of.as_deref().unwrap_or(&self.id)
    }
}

fn numbered() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    R.get_or_init(|| Regex::new(r"^\s*(?:\*\*)?(\d{1,3})[.)](?:\*\*)?(?:\s+|$)").unwrap())
}

fn bulleted() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    R.get_or_init(|| Regex::new(r"^\s*[-*•]\s+").unwrap())
}

#[derive(Clone, Copy, PartialEq)]
enum Style {
    Numbered,
    Bulleted,
}

impl Style {
    /// Length of the leading enumerator when `line` starts an item.
    fn marker(self, line: &str) -> Option<usize> {
        let re = match self {
            Style::Numbered => numbered(),
            Style::Bulleted => bulleted(),
        };
        re.find(line).map(|m| m.end())
    }
}

/// Splits a raw response into item texts.
///
/// Numbered lines take precedence over bulleted lines, which take precedence
/// over blank-line separated paragraphs. Lines before the first item are a
/// preamble and dropped. Lines directly under an item continue it; after a
/// blank line, text that does not start a new item is dropped.
pub fn parse_items(raw: &str) -> Vec<String> {
    let lines: Vec<&str> = raw.lines().collect();
    let style = if lines.iter().any(|l| numbered().is_match(l)) {
        Some(Style::Numbered)
    } else if lines.iter().any(|l| bulleted().is_match(l)) {
        Some(Style::Bulleted)
    } else {
        None
    };
    let items = match style {
        Some(style) => listed_items(&lines, style),
        None => paragraphs(&lines),
    };
    items.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn listed_items(lines: &[&str], style: Style) -> Vec<String> {
    let mut items: Vec<String> = Vec::new();
    // Some(true) while inside an item, Some(false) after a blank line.
    let mut open = None;
    for line in lines {
        if let Some(end) = style.marker(line) {
            let text = line[end..].trim();
            if style == Style::Numbered {
                items.extend(split_inline(line, text));
            } else {
                items.push(text.to_string());
            }
            open = Some(true);
        } else if line.trim().is_empty() {
            if open.is_some() {
                open = Some(false);
            }
        } else if open == Some(true) {
            let last = items.last_mut().unwrap();
            if !last.is_empty() {
                last.push(' ');
            }
            last.push_str(line.trim());
        }
    }
    items
}

/// Splits "1. A? 2. B?" written on one line, following the numbering.
fn split_inline(line: &str, text: &str) -> Vec<String> {
    let first: u32 = numbered().captures(line).unwrap()[1].parse().unwrap();
    let mut out = Vec::new();
    let mut rest = text;
    let mut next = first + 1;
    loop {
        let marker = Regex::new(&format!(r"\s{next}[.)]\s+")).unwrap();
        match marker.find(rest) {
            Some(m) => {
                out.push(rest[..m.start()].trim().to_string());
                rest = &rest[m.end()..];
                next += 1;
            }
            None => {
                out.push(rest.trim().to_string());
                return out;
            }
        }
    }
}

fn paragraphs(lines: &[&str]) -> Vec<String> {
    let mut paras: Vec<String> = Vec::new();
    let mut cur = String::new();
    for line in lines {
        if line.trim().is_empty() {
            if !cur.is_empty() {
                paras.push(std::mem::take(&mut cur));
            }
        } else {
            if !cur.is_empty() {
                cur.push(' ');
            }
            cur.push_str(line.trim());
        }
    }
    if !cur.is_empty() {
        paras.push(cur);
    }
    if paras.len() > 1 && paras[0].ends_with(':') {
        paras.remove(0);
    }
    paras
}

/// Lowercase, whitespace collapsed, trailing punctuation removed.
pub fn normalize(text: &str) -> String {
    let lower = text.to_lowercase();
    let collapsed = lower.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed.trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace()).to_string()
}

pub fn parse_candidates(run: &GenerationRun) -> Vec<CandidateCQ> {
    parse_items(&run.raw_response)
        .into_iter()
        .enumerate()
        .map(|(k, text)| CandidateCQ {
            id: format!("{}#{}", run.id, k + 1),
            normalized: normalize(&text),
            text,
            intervention_id: run.intervention_id.clone(),
            model_name: run.model_name.clone(),
            prompt_kind: run.prompt_kind,
            run_id: run.id.clone(),
            duplicate_of: None,
        })
        .collect()
}

/// Links every candidate to the first earlier candidate of the same
/// intervention with the same normalized text. Nothing is removed.
pub fn dedup(mut candidates: Vec<CandidateCQ>) -> Vec<CandidateCQ> {
    let mut first: HashMap<(String, String), String> = HashMap::new();
    for c in &mut candidates {
        let key = (c.intervention_id.clone(), c.normalized.clone());
        match first.get(&key) {
            Some(id) if *id != c.id => c.duplicate_of = Some(id.clone()),
            Some(_) => c.duplicate_of = None,
            None => {
                c.duplicate_of = None;
                first.insert(key, c.id.clone());
            }
        }
    }
    candidates
}
