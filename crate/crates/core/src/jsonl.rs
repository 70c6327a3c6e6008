//! Line-delimited JSON helpers shared by every on-disk format.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Decode {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

impl JsonlError {
    pub fn is_io(&self) -> bool {
        matches!(self, JsonlError::Io { .. })
    }
}

/// Reads every non-blank line of `path` as one record.
pub fn read<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    let io_err = |source| JsonlError::Io { path: path.to_path_buf(), source };
    let file = File::open(path).map_err(io_err)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|source| JsonlError::Decode {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Like [`read`], but a missing file is an empty log.
pub fn read_or_empty<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    if path.exists() {
        read(path)
    } else {
        Ok(Vec::new())
    }
}

pub fn to_string<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Overwrites `path` with the given records.
pub fn write<T: Serialize>(path: &Path, records: &[T]) -> Result<(), JsonlError> {
    let io_err = |source| JsonlError::Io { path: path.to_path_buf(), source };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    w.write_all(to_string(records).as_bytes()).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// Appends records to `path`, creating it if needed.
pub fn append<T: Serialize>(path: &Path, records: &[T]) -> Result<(), JsonlError> {
    let io_err = |source| JsonlError::Io { path: path.to_path_buf(), source };
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io_err)?;
    f.write_all(to_string(records).as_bytes()).map_err(io_err)?;
    f.flush().map_err(io_err)
}
