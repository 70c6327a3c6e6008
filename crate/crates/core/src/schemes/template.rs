use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{postedit_flags, SchemeError};
use crate::corpus::{ArgumentInstance, SchemeId};

/// Variable slots used by the scheme templates, written `<name>` in patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VariableSlot {
    #[serde(rename = "eventA")]
    EventA,
    #[serde(rename = "eventB")]
    EventB,
    #[serde(rename = "subjecta")]
    SubjectA,
    #[serde(rename = "subjectx")]
    SubjectX,
    #[serde(rename = "featF")]
    FeatF,
    #[serde(rename = "featG")]
    FeatG,
    #[serde(rename = "expertE")]
    ExpertE,
    #[serde(rename = "domainD")]
    DomainD,
    #[serde(rename = "goalG")]
    GoalG,
    #[serde(rename = "valueV")]
    ValueV,
    #[serde(rename = "direction")]
    Direction,
    #[serde(rename = "neg")]
    Neg,
    #[serde(rename = "C1")]
    C1,
    #[serde(rename = "C2")]
    C2,
    #[serde(rename = "large_majority")]
    LargeMajority,
    #[serde(rename = "argument1")]
    Argument1,
}

impl VariableSlot {
    pub const ALL: [VariableSlot; 16] = [
        VariableSlot::EventA,
        VariableSlot::EventB,
        VariableSlot::SubjectA,
        VariableSlot::SubjectX,
        VariableSlot::FeatF,
        VariableSlot::FeatG,
        VariableSlot::ExpertE,
        VariableSlot::DomainD,
        VariableSlot::GoalG,
        VariableSlot::ValueV,
        VariableSlot::Direction,
        VariableSlot::Neg,
        VariableSlot::C1,
        VariableSlot::C2,
        VariableSlot::LargeMajority,
        VariableSlot::Argument1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VariableSlot::EventA => "eventA",
            VariableSlot::EventB => "eventB",
            VariableSlot::SubjectA => "subjecta",
            VariableSlot::SubjectX => "subjectx",
            VariableSlot::FeatF => "featF",
            VariableSlot::FeatG => "featG",
            VariableSlot::ExpertE => "expertE",
            VariableSlot::DomainD => "domainD",
            VariableSlot::GoalG => "goalG",
            VariableSlot::ValueV => "valueV",
            VariableSlot::Direction => "direction",
            VariableSlot::Neg => "neg",
            VariableSlot::C1 => "C1",
            VariableSlot::C2 => "C2",
            VariableSlot::LargeMajority => "large_majority",
            VariableSlot::Argument1 => "argument1",
        }
    }

    /// Slots filled from the surrounding dialogue rather than from the
    /// argument's own premises and conclusion.
    pub fn is_contextual(self) -> bool {
        matches!(self, VariableSlot::Neg | VariableSlot::Argument1)
    }

    /// Whether an empty string is a legitimate binding. Only the polarity
    /// slot is: it holds either `""` or `"not "`.
    pub fn accepts_empty(self) -> bool {
        self == VariableSlot::Neg
    }

    pub fn validate(self, value: &str) -> Result<(), SchemeError> {
        let ok = match self {
            VariableSlot::Neg => value.is_empty() || value == "not ",
            _ => !value.trim().is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(SchemeError::InvalidBinding { slot: self, value: value.to_string() })
        }
    }
}

impl fmt::Display for VariableSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariableSlot {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        VariableSlot::ALL.into_iter().find(|v| v.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment<'a> {
    Text(&'a str),
    Slot(VariableSlot),
}

/// A template string split into literal text and slot occurrences.
///
/// Only `<name>` where `name` is a known slot counts as a slot; any other
/// angle-bracketed text is literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern<'a> {
    segments: Vec<Segment<'a>>,
}

impl<'a> Pattern<'a> {
    pub fn parse(src: &'a str) -> Pattern<'a> {
        let mut segments = Vec::new();
        let mut rest = src;
        let mut lit_start = 0usize;
        let mut pos = 0usize;
        while let Some(open) = rest.find('<') {
            let after = &rest[open + 1..];
            let slot = after.find('>').and_then(|close| {
                let name = &after[..close];
                name.parse::<VariableSlot>().ok().map(|s| (s, close))
            });
            match slot {
                Some((slot, close)) => {
                    let abs_open = pos + open;
                    if abs_open > lit_start {
                        segments.push(Segment::Text(&src[lit_start..abs_open]));
                    }
                    segments.push(Segment::Slot(slot));
                    let consumed = open + 1 + close + 1;
                    pos += consumed;
                    lit_start = pos;
                    rest = &rest[consumed..];
                }
                None => {
                    pos += open + 1;
                    rest = &rest[open + 1..];
                }
            }
        }
        if lit_start < src.len() {
            segments.push(Segment::Text(&src[lit_start..]));
        }
        Pattern { segments }
    }

    pub fn segments(&self) -> &[Segment<'a>] {
        &self.segments
    }

    /// Distinct slots in order of first occurrence.
    pub fn slots(&self) -> Vec<VariableSlot> {
        let mut out = Vec::new();
        for s in &self.segments {
            if let Segment::Slot(v) = s {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
        }
        out
    }
}

/// Replaces every slot occurrence in `pattern` with its binding, verbatim.
///
/// A missing or empty binding is an error; the error lists every such slot.
/// The polarity slot `neg` is the exception and may be bound to `""`.
pub fn instantiate(pattern: &str, bindings: &BTreeMap<VariableSlot, String>) -> Result<String, SchemeError> {
    let parsed = Pattern::parse(pattern);
    let missing: Vec<VariableSlot> = parsed
        .slots()
        .into_iter()
        .filter(|s| match bindings.get(s) {
            None => true,
            Some(v) => v.is_empty() && !s.accepts_empty(),
        })
        .collect();
    if !missing.is_empty() {
        return Err(SchemeError::UnboundSlot(missing));
    }
    let mut out = String::with_capacity(pattern.len() * 2);
    for seg in parsed.segments() {
        match seg {
            Segment::Text(t) => out.push_str(t),
            Segment::Slot(s) => out.push_str(&bindings[s]),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeTemplate {
    pub scheme: SchemeId,
    pub premise_patterns: Vec<String>,
    pub conclusion_pattern: String,
    pub cq_patterns: Vec<String>,
    /// Premise/conclusion wording reconstructed editorially rather than taken
    /// from a published template.
    #[serde(default)]
    pub editorial: bool,
}

impl SchemeTemplate {
    /// Slots that occur anywhere in the template.
    pub fn slots(&self) -> BTreeSet<VariableSlot> {
        self.all_patterns().flat_map(|p| Pattern::parse(p).slots()).collect()
    }

    /// Slots used by the critical questions.
    pub fn cq_slots(&self) -> BTreeSet<VariableSlot> {
        self.cq_patterns.iter().flat_map(|p| Pattern::parse(p).slots()).collect()
    }

    fn all_patterns(&self) -> impl Iterator<Item = &String> {
        self.premise_patterns.iter().chain(std::iter::once(&self.conclusion_pattern)).chain(&self.cq_patterns)
    }

    fn check(&self) -> Result<(), String> {
        if self.cq_patterns.is_empty() {
            return Err(format!("{}: no critical questions", self.scheme));
        }
        let body: BTreeSet<VariableSlot> = self
            .premise_patterns
            .iter()
            .chain(std::iter::once(&self.conclusion_pattern))
            .flat_map(|p| Pattern::parse(p).slots())
            .collect();
        for slot in self.cq_slots() {
            if !body.contains(&slot) && !slot.is_contextual() {
                return Err(format!("{}: slot {slot} only occurs in critical questions", self.scheme));
            }
        }
        for p in self.all_patterns() {
            let residual = Pattern::parse(p)
                .segments()
                .iter()
                .any(|s| matches!(s, Segment::Text(t) if t.contains('<') || t.contains('>')));
            if residual {
                return Err(format!("{}: unknown slot in {p:?}", self.scheme));
            }
        }
        Ok(())
    }
}

/// The full template set, keyed by scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registry {
    templates: BTreeMap<SchemeId, SchemeTemplate>,
    order: Vec<SchemeId>,
}

const BUNDLED: &str = include_str!("../../data/schemes.jsonl");

impl Registry {
    pub fn from_jsonl(text: &str) -> Result<Registry, SchemeError> {
        let mut templates = BTreeMap::new();
        let mut order = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let load = |message: String| SchemeError::Load { line: i + 1, message };
            let t: SchemeTemplate = serde_json::from_str(line).map_err(|e| load(e.to_string()))?;
            t.check().map_err(load)?;
            order.push(t.scheme);
            if templates.insert(t.scheme, t).is_some() {
                return Err(load("duplicate scheme".to_string()));
            }
        }
        if let Some(missing) = SchemeId::ALL.iter().find(|s| !templates.contains_key(s)) {
            return Err(SchemeError::MissingScheme(*missing));
        }
        Ok(Registry { templates, order })
    }

    pub fn load(path: &Path) -> Result<Registry, SchemeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SchemeError::Load { line: 0, message: format!("{}: {e}", path.display()) })?;
        Registry::from_jsonl(&text)
    }

    /// Serialises the templates in file order, one record per line.
    pub fn to_jsonl(&self) -> String {
        let records: Vec<&SchemeTemplate> = self.order.iter().map(|s| &self.templates[s]).collect();
        crate::jsonl::to_string(&records)
    }

    pub fn get(&self, scheme: SchemeId) -> &SchemeTemplate {
        &self.templates[&scheme]
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SchemeId, &SchemeTemplate)> {
        self.templates.iter()
    }

    pub fn cq_count(&self) -> usize {
        self.templates.values().map(|t| t.cq_patterns.len()).sum()
    }
}

impl std::ops::Index<SchemeId> for Registry {
    type Output = SchemeTemplate;

    fn index(&self, scheme: SchemeId) -> &SchemeTemplate {
        self.get(scheme)
    }
}

/// The bundled template set.
pub fn registry() -> &'static Registry {
    static REGISTRY: OnceLock<Registry> = OnceLock::new();
    REGISTRY.get_or_init(|| Registry::from_jsonl(BUNDLED).expect("bundled scheme file is valid"))
}

/// A critical question produced from a template and an argument's bindings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstantiatedCQ {
    /// `<argument id>/cq<template index>`
    pub id: String,
    pub text: String,
    pub scheme: SchemeId,
    pub argument_id: String,
    pub template_index: usize,
    pub needs_postedit: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub postedit_text: Option<String>,
    #[serde(default)]
    pub discarded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discard_reason: Option<String>,
}

impl InstantiatedCQ {
    pub fn make_id(argument_id: &str, template_index: usize) -> String {
        format!("{argument_id}/cq{template_index}")
    }

    /// The text that goes into the dataset: the post-edit when present.
    pub fn final_text(&self) -> &str {
        self.postedit_text.as_deref().unwrap_or(&self.text)
    }
}

pub fn instantiate_cqs(arg: &ArgumentInstance) -> Result<Vec<InstantiatedCQ>, SchemeError> {
    instantiate_cqs_with(registry(), arg)
}

/// One question per template pattern of the argument's scheme, in template
/// order.
pub fn instantiate_cqs_with(reg: &Registry, arg: &ArgumentInstance) -> Result<Vec<InstantiatedCQ>, SchemeError> {
    if arg.discarded {
        return Err(SchemeError::Discarded(arg.id.clone()));
    }
    let template = reg.get(arg.scheme);
    let mut missing = BTreeSet::new();
    let mut out = Vec::with_capacity(template.cq_patterns.len());
    for (i, p) in template.cq_patterns.iter().enumerate() {
        match instantiate(p, &arg.bindings) {
            Ok(text) => out.push(InstantiatedCQ {
                id: InstantiatedCQ::make_id(&arg.id, i),
                needs_postedit: postedit_flags(&text),
                text,
                scheme: arg.scheme,
                argument_id: arg.id.clone(),
                template_index: i,
                postedit_text: None,
                discarded: false,
                discard_reason: None,
            }),
            Err(SchemeError::UnboundSlot(s)) => missing.extend(s),
            Err(e) => return Err(e),
        }
    }
    if !missing.is_empty() {
        return Err(SchemeError::UnboundSlot(missing.into_iter().collect()));
    }
    Ok(out)
}
