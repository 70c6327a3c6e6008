//! `cqgen`: builds a critical-question dataset from argument maps.
//!
//! Every command except `generate` only reads persisted files, so running it
//! twice over the same project prints the same bytes.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cqgen_core::corpus::CorpusError;
use cqgen_core::jsonl::JsonlError;
use cqgen_core::llmgen::LlmError;
use cqgen_core::project::ProjectError;
use cqgen_core::Exec;
use cqgen_service::ServiceError;

#[derive(Debug, Parser)]
#[command(name = "cqgen", version, about = "Build a reference dataset of critical questions")]
pub struct Cli {
    /// Project directory (snapshot, runs, judgments, roster).
    #[arg(long, short = 'd', global = true, env = "CQGEN_DATA_DIR", default_value = ".")]
    pub data_dir: PathBuf,
    /// Run data-parallel loops on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read argument maps and write the intervention snapshot.
    Ingest(IngestArgs),
    /// Print the theory-CQs of every annotated argument.
    Instantiate(OutputArgs),
    /// Send prompts to a chat-completion endpoint and append the runs.
    Generate(GenerateArgs),
    /// Re-parse stored runs into candidate questions.
    Parse(OutputArgs),
    /// Print one report.
    Report(ReportArgs),
    /// Run the annotation service.
    Serve(ServeArgs),
    /// Write the assembled dataset as JSON lines.
    Export(ExportArgs),
    /// Cohen's kappa per stage over doubly annotated items.
    Agreement(OutputArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Records,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Project directory; overrides --data-dir.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory searched recursively for `*.jsonl` argument maps.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Snapshot path; defaults to `<data-dir>/snapshot.jsonl`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Turns with more propositions are split.
    #[arg(long, default_value_t = 12)]
    pub split_ceiling: usize,
    /// Turns with fewer propositions are merged into the next one.
    #[arg(long, default_value_t = 2)]
    pub merge_floor: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PromptArg {
    Q,
    Dq,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Model name sent to the endpoint; repeat for several models.
    #[arg(long, required = true)]
    pub model: Vec<String>,
    /// Prompt kinds to run; both when omitted.
    #[arg(long, value_enum)]
    pub prompt: Vec<PromptArg>,
    /// Base URL of the endpoint; the key is read from CQGEN_API_KEY.
    #[arg(long, env = "CQGEN_ENDPOINT")]
    pub endpoint: String,
    /// Requests in flight at once.
    #[arg(long, default_value_t = 4)]
    pub parallel: usize,
    /// Restrict to these interventions; all when omitted.
    #[arg(long)]
    pub intervention: Vec<String>,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 512)]
    pub max_tokens: u32,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Retries after the first attempt of each request.
    #[arg(long, default_value_t = 2)]
    pub retries: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportKind {
    Counts,
    Relevance,
    Matching,
    Validity,
    Types,
    Dataset,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(value_enum)]
    pub kind: ReportKind,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "CQGEN_LISTEN", default_value = "127.0.0.1:8080")]
    pub listen: std::net::SocketAddr,
    /// Roster file; defaults to `<data-dir>/roster.json`.
    #[arg(long, env = "CQGEN_ROSTER")]
    pub roster: Option<PathBuf>,
    /// Share of tasks that get a second annotator.
    #[arg(long, env = "CQGEN_DOUBLE_RATE", default_value_t = 0.2)]
    pub double_rate: f64,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    /// Also write relevant candidates that matched no argument here.
    #[arg(long)]
    pub no_argument: Option<PathBuf>,
}

/// 2 when the failure came from the file system or the network, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|e| {
        e.is::<std::io::Error>()
            || e.downcast_ref::<ProjectError>().is_some_and(ProjectError::is_io)
            || e.downcast_ref::<CorpusError>().is_some_and(CorpusError::is_io)
            || e.downcast_ref::<JsonlError>().is_some_and(JsonlError::is_io)
            || e.downcast_ref::<ServiceError>().is_some_and(|s| matches!(s, ServiceError::Io(_)))
            || e.downcast_ref::<LlmError>().is_some_and(|l| {
                matches!(l, LlmError::RunFailed { .. } | LlmError::Transport(_) | LlmError::Status { .. })
            })
    });
    if io {
        2
    } else {
        1
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            eprintln!("{}", one_line(rendered.lines().next().unwrap_or("invalid arguments")));
            return ExitCode::from(1);
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&format!("{e:#}")));
            ExitCode::from(exit_code(&e))
        }
    }
}
