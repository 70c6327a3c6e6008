use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::LlmError;
use crate::corpus::Intervention;

/// Query sentence shared by both prompts.
pub const QUERY: &str =
    "List the critical questions that should be asked regarding the arguments in the following paragraph:";

/// Definition sentence that opens the definition-plus-query prompt.
pub const DEFINITION: &str = "Critical questions are the set of enquiries that should be asked in order to judge if an argument is good or fallacious by unmasking the assumptions held by the premises of the argument.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PromptKind {
    QueryOnly,
    DefinitionPlusQuery,
}

impl PromptKind {
    pub const ALL: [PromptKind; 2] = [PromptKind::QueryOnly, PromptKind::DefinitionPlusQuery];

    /// Short code used in run ids and on the command line.
    pub fn code(self) -> &'static str {
        match self {
            PromptKind::QueryOnly => "q",
            PromptKind::DefinitionPlusQuery => "dq",
        }
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for PromptKind {
    type Err = LlmError;

    fn from_str(s: &str) -> Result<Self, LlmError> {
        match s {
            "q" | "QueryOnly" => Ok(PromptKind::QueryOnly),
            "dq" | "DefinitionPlusQuery" => Ok(PromptKind::DefinitionPlusQuery),
            other => Err(LlmError::PromptKind(other.to_string())),
        }
    }
}

/// Joins propositions into one paragraph: each is trimmed, gets a full stop
/// unless it already ends in punctuation, and they are separated by a space.
pub fn join_propositions<S: AsRef<str>>(props: &[S]) -> String {
    let mut out = String::new();
    for p in props {
        let p = p.as_ref().trim();
        if p.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(p);
        if !p.ends_with(['.', '?', '!', ',', ';', ':']) {
            out.push('.');
        }
    }
    out
}

pub fn build_prompt(kind: PromptKind, intervention: &Intervention) -> String {
    let text = join_propositions(&intervention.propositions);
    let query = format!("{QUERY} {}: \u{201c}{text}\u{201d}", intervention.speaker);
    match kind {
        PromptKind::QueryOnly => query,
        PromptKind::DefinitionPlusQuery => format!("{DEFINITION} {query}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SourceDataset;

    fn iv(speaker: &str, props: &[&str]) -> Intervention {
        Intervention {
            id: "x".into(),
            speaker: speaker.into(),
            source_dataset: SourceDataset::MoralMaze,
            propositions: props.iter().map(|s| s.to_string()).collect(),
            proposition_ids: (0..props.len()).map(|i| i.to_string()).collect(),
            arguments: vec![],
        }
    }

    #[test]
    fn joining_keeps_existing_punctuation() {
        assert_eq!(join_propositions(&["a", " b? ", "c,", "d"]), "a. b? c, d.");
        assert_eq!(join_propositions::<&str>(&[]), "");
    }

    #[test]
    fn query_prompt_shape() {
        let p = build_prompt(PromptKind::QueryOnly, &iv("MT", &["T"]));
        assert!(p.starts_with("List the critical questions that should be asked"));
        assert!(p.ends_with("MT: \u{201c}T.\u{201d}"));
    }

    #[test]
    fn definition_prompt_prefixes_query() {
        let i = iv("MT", &["T"]);
        let dq = build_prompt(PromptKind::DefinitionPlusQuery, &i);
        assert!(dq.starts_with("Critical questions are the set of enquiries"));
        assert!(dq.ends_with(&build_prompt(PromptKind::QueryOnly, &i)));
    }

    #[test]
    fn codes_round_trip() {
        for k in PromptKind::ALL {
            assert_eq!(k.code().parse::<PromptKind>().unwrap(), k);
        }
        assert!("x".parse::<PromptKind>().is_err());
    }
}
