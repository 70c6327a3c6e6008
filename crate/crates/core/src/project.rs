//! A project directory: the persisted inputs of every command.
//!
//! ```text
//! snapshot.jsonl    corpus snapshot (interventions with their arguments)
//! runs.jsonl        generation runs, raw responses verbatim
//! judgments.jsonl   append-only judgment log
//! roster.json       annotator roster
//! schemes.jsonl     optional replacement for the bundled templates
//! candidates.jsonl  derived: parsed and deduplicated candidates
//! ```
//!
//! Only the first four are sources of truth. Derived files can be deleted at
//! any time and are rebuilt from the runs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{read_snapshot, Corpus, CorpusError};
use crate::jsonl::{self, JsonlError};
use crate::llmgen::{dedup, parse_candidates, CandidateCQ, GenerationRun};
use crate::pipeline::{JudgmentRecord, PipelineError, PipelineState};
use crate::schemes::{registry, Registry, SchemeError};
use crate::Exec;

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("{path}: {message}")]
    Roster { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ProjectError {
    pub fn is_io(&self) -> bool {
        match self {
            ProjectError::Corpus(e) => e.is_io(),
            ProjectError::Jsonl(e) => e.is_io(),
            ProjectError::Io { .. } => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Roster {
    pub annotators: Vec<String>,
}

impl Roster {
    pub fn load(path: &Path) -> Result<Roster, ProjectError> {
        let text = std::fs::read_to_string(path).map_err(|source| ProjectError::Io { path: path.into(), source })?;
        let roster: Roster = serde_json::from_str(&text)
            .map_err(|e| ProjectError::Roster { path: path.into(), message: e.to_string() })?;
        let mut ids = roster.annotators.clone();
        ids.sort();
        ids.dedup();
        if ids.len() != roster.annotators.len() || ids.iter().any(|a| a.trim().is_empty()) {
            return Err(ProjectError::Roster {
                path: path.into(),
                message: "annotator ids must be unique and non-empty".into(),
            });
        }
        Ok(roster)
    }

    pub fn contains(&self, annotator: &str) -> bool {
        self.annotators.iter().any(|a| a == annotator)
    }
}

#[derive(Debug, Clone)]
pub struct ProjectPaths {
    pub root: PathBuf,
}

impl ProjectPaths {
    pub fn new(root: impl Into<PathBuf>) -> ProjectPaths {
        ProjectPaths { root: root.into() }
    }

    pub fn snapshot(&self) -> PathBuf {
        self.root.join("snapshot.jsonl")
    }

    pub fn runs(&self) -> PathBuf {
        self.root.join("runs.jsonl")
    }

    pub fn judgments(&self) -> PathBuf {
        self.root.join("judgments.jsonl")
    }

    pub fn roster(&self) -> PathBuf {
        self.root.join("roster.json")
    }

    pub fn schemes(&self) -> PathBuf {
        self.root.join("schemes.jsonl")
    }

    pub fn candidates(&self) -> PathBuf {
        self.root.join("candidates.jsonl")
    }
}

#[derive(Debug, Clone)]
pub struct Project {
    pub paths: ProjectPaths,
    pub corpus: Corpus,
    pub runs: Vec<GenerationRun>,
    pub judgments: Vec<JudgmentRecord>,
    pub roster: Roster,
    pub registry: Registry,
}

impl Project {
    /// Loads a project directory. Only the snapshot is required; missing
    /// logs are empty and a missing roster has no annotators.
    pub fn load(root: &Path) -> Result<Project, ProjectError> {
        let paths = ProjectPaths::new(root);
        let corpus = read_snapshot(&paths.snapshot())?;
        let runs = jsonl::read_or_empty(&paths.runs())?;
        let judgments = jsonl::read_or_empty(&paths.judgments())?;
        let roster = if paths.roster().exists() { Roster::load(&paths.roster())? } else { Roster::default() };
        let registry = if paths.schemes().exists() { Registry::load(&paths.schemes())? } else { registry().clone() };
        Ok(Project { paths, corpus, runs, judgments, roster, registry })
    }

    /// Parses every stored run, in log order, and links duplicates.
    pub fn candidates(&self, exec: Exec) -> Vec<CandidateCQ> {
        dedup(exec.map(&self.runs, parse_candidates).into_iter().flatten().collect())
    }

    pub fn state(&self, exec: Exec) -> Result<PipelineState, ProjectError> {
        Ok(PipelineState::fold(&self.corpus, &self.registry, self.candidates(exec), &self.judgments)?)
    }

    /// Rewrites the derived candidate file.
    pub fn write_candidates(&self, exec: Exec) -> Result<Vec<CandidateCQ>, ProjectError> {
        let c = self.candidates(exec);
        jsonl::write(&self.paths.candidates(), &c)?;
        Ok(c)
    }
}
