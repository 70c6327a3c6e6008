//! Canonical corpus snapshot: one intervention per line, arguments inline.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::interventions::{
    build_interventions, ArgumentInstance, Corpus, Intervention, PreprocessConfig, SourceDataset,
};
use super::nodeset::parse_nodeset;
use super::CorpusError;
use crate::{jsonl, Exec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub id: String,
    pub speaker: String,
    pub source_dataset: SourceDataset,
    pub propositions: Vec<String>,
    pub proposition_ids: Vec<String>,
    pub arguments: Vec<ArgumentInstance>,
}

impl Corpus {
    pub fn to_records(&self) -> Vec<SnapshotRecord> {
        self.interventions
            .iter()
            .map(|i| SnapshotRecord {
                id: i.id.clone(),
                speaker: i.speaker.clone(),
                source_dataset: i.source_dataset,
                propositions: i.propositions.clone(),
                proposition_ids: i.proposition_ids.clone(),
                arguments: self.arguments_of(i).cloned().collect(),
            })
            .collect()
    }

    pub fn from_records(records: Vec<SnapshotRecord>) -> Corpus {
        let mut corpus = Corpus::default();
        for r in records {
            corpus.interventions.push(Intervention {
                id: r.id,
                speaker: r.speaker,
                source_dataset: r.source_dataset,
                propositions: r.propositions,
                proposition_ids: r.proposition_ids,
                arguments: r.arguments.iter().map(|a| a.id.clone()).collect(),
            });
            corpus.arguments.extend(r.arguments);
        }
        corpus
    }

    pub fn counts(&self) -> CorpusCounts {
        let mut c = CorpusCounts::default();
        for i in &self.interventions {
            let row = c.by_dataset.entry(i.source_dataset).or_default();
            row.interventions += 1;
            row.arguments += i.arguments.len();
            if !i.arguments.is_empty() {
                row.with_arguments += 1;
            }
        }
        c.interventions = self.interventions.len();
        c.with_arguments = c.by_dataset.values().map(|r| r.with_arguments).sum();
        c.arguments = self.arguments.len();
        c
    }

    fn check_unique_ids(&self) -> Result<(), CorpusError> {
        let mut seen = HashSet::new();
        for i in &self.interventions {
            if !seen.insert(i.id.as_str()) {
                return Err(CorpusError::DuplicateId { kind: "intervention", id: i.id.clone() });
            }
        }
        let mut seen = HashSet::new();
        for a in &self.arguments {
            if !seen.insert(a.id.as_str()) {
                return Err(CorpusError::DuplicateId { kind: "argument", id: a.id.clone() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DatasetCounts {
    pub interventions: usize,
    pub with_arguments: usize,
    pub arguments: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusCounts {
    pub interventions: usize,
    pub with_arguments: usize,
    pub arguments: usize,
    pub by_dataset: BTreeMap<SourceDataset, DatasetCounts>,
}

pub fn write_snapshot(path: &Path, corpus: &Corpus) -> Result<(), CorpusError> {
    Ok(jsonl::write(path, &corpus.to_records())?)
}

pub fn read_snapshot(path: &Path) -> Result<Corpus, CorpusError> {
    Ok(Corpus::from_records(jsonl::read(path)?))
}

fn dataset_for(path: &Path) -> SourceDataset {
    path.ancestors()
        .filter_map(|p| p.file_name()?.to_str())
        .find_map(SourceDataset::from_dir_name)
        .unwrap_or(SourceDataset::Other)
}

/// Ingests every `*.jsonl` argument map below `root`, in path order.
///
/// The dataset tag of a file is taken from its nearest ancestor directory
/// named `US2016` or `MoralMaze`. Files are independent, so parsing and
/// intervention building fan out according to `exec`.
pub fn ingest_dir(root: &Path, cfg: &PreprocessConfig, exec: Exec) -> Result<Corpus, CorpusError> {
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| CorpusError::Io {
            path: root.to_path_buf(),
            source: e.into_io_error().unwrap_or_else(|| std::io::Error::other("directory walk failed")),
        })?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|e| e == "jsonl") {
            files.push(entry.into_path());
        }
    }
    let parts = exec.try_map(&files, |path| {
        let raw = fs::read(path).map_err(|source| CorpusError::Io { path: path.clone(), source })?;
        let ns = parse_nodeset(&raw).map_err(|e| CorpusError::File { path: path.clone(), source: Box::new(e) })?;
        Ok::<_, CorpusError>(build_interventions(&ns, dataset_for(path), cfg))
    })?;
    let mut corpus = Corpus::default();
    for p in parts {
        corpus.extend(p);
    }
    corpus.check_unique_ids()?;
    Ok(corpus)
}
