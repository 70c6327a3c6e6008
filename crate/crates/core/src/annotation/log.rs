use std::path::{Path, PathBuf};

use crate::jsonl::{self, JsonlError};
use crate::pipeline::JudgmentRecord;

/// The append-only judgment log. Records are never rewritten; ids are
/// assigned in append order (`j1`, `j2`, ...).
#[derive(Debug)]
pub struct JudgmentLog {
    path: Option<PathBuf>,
    records: Vec<JudgmentRecord>,
}

impl JudgmentLog {
    pub fn open(path: &Path) -> Result<JudgmentLog, JsonlError> {
        Ok(JudgmentLog { path: Some(path.to_path_buf()), records: jsonl::read_or_empty(path)? })
    }

    /// A log that lives only in memory.
    pub fn in_memory(records: Vec<JudgmentRecord>) -> JudgmentLog {
        JudgmentLog { path: None, records }
    }

    pub fn records(&self) -> &[JudgmentRecord] {
        &self.records
    }

    pub fn next_id(&self) -> String {
        format!("j{}", self.records.len() + 1)
    }

    /// Writes the record to disk before it becomes visible in memory.
    pub fn append(&mut self, mut record: JudgmentRecord) -> Result<String, JsonlError> {
        record.id = self.next_id();
        if let Some(path) = &self.path {
            jsonl::append(path, std::slice::from_ref(&record))?;
        }
        let id = record.id.clone();
        self.records.push(record);
        Ok(id)
    }
}
