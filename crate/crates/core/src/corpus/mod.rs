//! Corpus ingestion: argument maps in, interventions and arguments out.

mod interventions;
mod nodeset;
mod scheme;
mod snapshot;

pub use interventions::{
    build_interventions, extract_arguments, ArgumentInstance, ArgumentLink, Corpus, Extraction, Intervention,
    PreprocessConfig, SkippedInference, SourceDataset,
};
pub use nodeset::{aif_to_records, parse_nodeset, Edge, Node, NodeKind, NodeSet, Record};
pub use scheme::{map_scheme, SchemeId};
pub use snapshot::{ingest_dir, read_snapshot, write_snapshot, CorpusCounts, SnapshotRecord};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("edge references missing node {0:?}")]
    DanglingEdge(String),
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("scheme label on non-inference node {0:?}")]
    MisplacedSchemeLabel(String),
    #[error("unknown argumentation scheme {0:?}")]
    UnknownScheme(String),
    #[error("duplicate {kind} id {id:?} across corpus files")]
    DuplicateId { kind: &'static str, id: String },
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<CorpusError>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Snapshot(#[from] crate::jsonl::JsonlError),
}

impl CorpusError {
    pub fn is_io(&self) -> bool {
        match self {
            CorpusError::Io { .. } => true,
            CorpusError::Snapshot(e) => e.is_io(),
            CorpusError::File { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
