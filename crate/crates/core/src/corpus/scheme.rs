use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// The eighteen argumentation schemes the pipeline works with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeId {
    CauseToEffect,
    Consequences,
    Example,
    Sign,
    Analogy,
    PracticalReasoning,
    ExpertOpinion,
    PopularOpinion,
    CircumstantialAdHominem,
    VerbalClassification,
    GenericAdHominem,
    PositionToKnow,
    Values,
    Bias,
    FearAppeal,
    DangerAppeal,
    Alternatives,
    PopularPractice,
}

impl SchemeId {
    pub const ALL: [SchemeId; 18] = [
        SchemeId::CauseToEffect,
        SchemeId::Consequences,
        SchemeId::Example,
        SchemeId::Sign,
        SchemeId::Analogy,
        SchemeId::PracticalReasoning,
        SchemeId::ExpertOpinion,
        SchemeId::PopularOpinion,
        SchemeId::CircumstantialAdHominem,
        SchemeId::VerbalClassification,
        SchemeId::GenericAdHominem,
        SchemeId::PositionToKnow,
        SchemeId::Values,
        SchemeId::Bias,
        SchemeId::FearAppeal,
        SchemeId::DangerAppeal,
        SchemeId::Alternatives,
        SchemeId::PopularPractice,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::CauseToEffect => "CauseToEffect",
            SchemeId::Consequences => "Consequences",
            SchemeId::Example => "Example",
            SchemeId::Sign => "Sign",
            SchemeId::Analogy => "Analogy",
            SchemeId::PracticalReasoning => "PracticalReasoning",
            SchemeId::ExpertOpinion => "ExpertOpinion",
            SchemeId::PopularOpinion => "PopularOpinion",
            SchemeId::CircumstantialAdHominem => "CircumstantialAdHominem",
            SchemeId::VerbalClassification => "VerbalClassification",
            SchemeId::GenericAdHominem => "GenericAdHominem",
            SchemeId::PositionToKnow => "PositionToKnow",
            SchemeId::Values => "Values",
            SchemeId::Bias => "Bias",
            SchemeId::FearAppeal => "FearAppeal",
            SchemeId::DangerAppeal => "DangerAppeal",
            SchemeId::Alternatives => "Alternatives",
            SchemeId::PopularPractice => "PopularPractice",
        }
    }

    /// Heading shown to annotators, e.g. "Argument from CauseToEffect".
    pub fn display_name(self) -> String {
        match self {
            SchemeId::PracticalReasoning => "Practical Reasoning".to_string(),
            other => format!("Argument from {}", other.as_str()),
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        map_scheme(s)
    }
}

/// Source labels accepted from the two debate corpora, keyed by their
/// normalised form (lowercase, whitespace removed).
const LABELS: &[(&str, SchemeId)] = &[
    ("causetoeffect", SchemeId::CauseToEffect),
    ("consequences", SchemeId::Consequences),
    ("negativeconsequences", SchemeId::Consequences),
    ("positiveconsequences", SchemeId::Consequences),
    ("example", SchemeId::Example),
    ("sign", SchemeId::Sign),
    ("signfromotherevents", SchemeId::Sign),
    ("analogy", SchemeId::Analogy),
    ("practicalreasoning", SchemeId::PracticalReasoning),
    ("expertopinion", SchemeId::ExpertOpinion),
    ("popularopinion", SchemeId::PopularOpinion),
    ("circumstantialadhominem", SchemeId::CircumstantialAdHominem),
    ("verbalclassification", SchemeId::VerbalClassification),
    ("genericadhominem", SchemeId::GenericAdHominem),
    ("positiontoknow", SchemeId::PositionToKnow),
    ("values", SchemeId::Values),
    ("bias", SchemeId::Bias),
    ("fearappeal", SchemeId::FearAppeal),
    ("dangerappeal", SchemeId::DangerAppeal),
    ("alternatives", SchemeId::Alternatives),
    ("popularpractice", SchemeId::PopularPractice),
];

/// Maps a corpus scheme label onto the canonical scheme set.
///
/// Matching ignores case and whitespace, so `"Cause To Effect"` and
/// `"CauseToEffect"` are the same label. Anything outside the mapping table is
/// an [`CorpusError::UnknownScheme`].
pub fn map_scheme(label: &str) -> Result<SchemeId, CorpusError> {
    let key: String = label.chars().filter(|c| !c.is_whitespace()).flat_map(char::to_lowercase).collect();
    LABELS
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, id)| *id)
        .ok_or_else(|| CorpusError::UnknownScheme(label.to_string()))
}
