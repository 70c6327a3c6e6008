#![allow(dead_code)]

use std::path::{Path, PathBuf};

use cqgen_core::project::Project;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn gold_dir() -> PathBuf {
    fixtures().join("gold")
}

pub fn gold() -> Project {
    Project::load(&gold_dir()).expect("gold project loads")
}

/// Copies the persisted (non-derived) gold files into a fresh directory.
pub fn gold_copy() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for f in ["snapshot.jsonl", "runs.jsonl", "judgments.jsonl", "roster.json"] {
        std::fs::copy(gold_dir().join(f), dir.path().join(f)).unwrap();
    }
    dir
}

pub fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Cohen's kappa from an explicit confusion matrix over the union of labels.
pub fn brute_kappa(a: &[u8], b: &[u8]) -> f64 {
    let mut cats: Vec<u8> = a.iter().chain(b).copied().collect();
    cats.sort();
    cats.dedup();
    let k = cats.len();
    let pos = |x: u8| cats.iter().position(|c| *c == x).unwrap();
    let mut m = vec![vec![0.0f64; k]; k];
    for (x, y) in a.iter().zip(b) {
        m[pos(*x)][pos(*y)] += 1.0;
    }
    let n = a.len() as f64;
    let diag: f64 = (0..k).map(|i| m[i][i]).sum();
    let mut chance = 0.0;
    for (i, r) in m.iter().enumerate() {
        let row: f64 = r.iter().sum();
        let col: f64 = (0..k).map(|j| m[j][i]).sum();
        chance += (row / n) * (col / n);
    }
    let observed = diag / n;
    if chance == 1.0 {
        // both annotators used one and the same label throughout
        return 1.0;
    }
    (observed - chance) / (1.0 - chance)
}
