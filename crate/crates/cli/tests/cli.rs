use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn cqgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqgen"))
        .args(args)
        .env_remove("CQGEN_DATA_DIR")
        .env_remove("CQGEN_ENDPOINT")
        .env_remove("CQGEN_API_KEY")
        .env("RUST_LOG", "off")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn gold() -> String {
    fixtures().join("gold").display().to_string()
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["ingest", "instantiate", "generate", "parse", "report", "serve", "export", "agreement"] {
        let o = cqgen(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}: {}", stderr(&o));
        assert!(stdout(&o).contains("Usage"), "{sub}");
    }
    assert_eq!(cqgen(&["--help"]).status.code(), Some(0));
}

#[test]
fn ingest_then_count_the_full_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let corpus = fixtures().join("corpus");
    let o = cqgen(&["-d", d, "ingest", "--in", corpus.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("snapshot.jsonl").is_file());

    let o = cqgen(&["-d", d, "report", "counts", "--format", "records"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let counts: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(counts["interventions"], 370);
    assert_eq!(counts["with_arguments"], 117);

    let o = cqgen(&["-d", d, "report", "counts"]);
    let table = stdout(&o);
    assert!(table.contains("MoralMaze") && table.contains("US2016") && table.contains("370"), "{table}");
}

#[test]
fn reports_are_reproducible() {
    for kind in ["relevance", "matching", "validity", "types", "dataset"] {
        let a = cqgen(&["report", kind, "--in", &gold(), "--format", "records"]);
        assert_eq!(a.status.code(), Some(0), "{kind}: {}", stderr(&a));
        let b = cqgen(&["--sequential", "report", kind, "--in", &gold(), "--format", "records"]);
        assert!(!a.stdout.is_empty(), "{kind}");
        assert_eq!(a.stdout, b.stdout, "{kind}");
        for line in stdout(&a).lines() {
            serde_json::from_str::<Value>(line).unwrap_or_else(|e| panic!("{kind}: {e}: {line}"));
        }
    }
}

#[test]
fn export_and_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dataset.jsonl");
    let none = dir.path().join("no_argument.jsonl");
    let o = cqgen(&[
        "export",
        "--in",
        &gold(),
        "--format",
        "records",
        "--out",
        out.to_str().unwrap(),
        "--no-argument",
        none.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let entries = std::fs::read_to_string(&out).unwrap();
    assert!(entries.lines().count() > 0);
    for line in entries.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["intervention_id"].is_string());
    }
    assert!(none.is_file());

    let o = cqgen(&["agreement", "--in", &gold()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("RelevanceTriage"));
}

#[test]
fn parse_writes_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.jsonl");
    let o = cqgen(&["parse", "--in", &gold(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 495);
}

#[test]
fn bad_usage_exits_one_with_a_single_line() {
    let o = cqgen(&["report", "relevance", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr(&o).trim().lines().count(), 1, "{}", stderr(&o));

    let o = cqgen(&["ingest", "--in", "x", "--split-ceiling", "1", "--merge-floor", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr(&o).trim().lines().count(), 1, "{}", stderr(&o));
}

#[test]
fn missing_project_is_an_io_failure() {
    let o = cqgen(&["report", "relevance", "--in", "/nonexistent/cqgen"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.starts_with("error:"), "{err}");
    assert_eq!(err.trim().lines().count(), 1);
}

#[test]
fn unreachable_endpoint_fails_generation_without_touching_the_log() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["snapshot.jsonl", "runs.jsonl", "roster.json"] {
        std::fs::copy(fixtures().join("gold").join(f), dir.path().join(f)).unwrap();
    }
    let before = std::fs::read(dir.path().join("runs.jsonl")).unwrap();
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let endpoint = format!("http://127.0.0.1:{port}/v1/");
    let d = dir.path().to_str().unwrap();
    let o = cqgen(&[
        "-d",
        d,
        "generate",
        "--model",
        "m",
        "--prompt",
        "q",
        "--endpoint",
        &endpoint,
        "--retries",
        "0",
        "--intervention",
        "US2016-us01L1",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(std::fs::read(dir.path().join("runs.jsonl")).unwrap(), before);
}
