use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cqgen_core::corpus::{ingest_dir, read_snapshot, write_snapshot, CorpusCounts, PreprocessConfig};
use cqgen_core::jsonl;
use cqgen_core::llmgen::{generate_batch, ChatClient, Decoding, EndpointConfig, PromptKind, RunLog, RunRequest};
use cqgen_core::pipeline::{
    assemble_dataset, matching_report, relevance_report, render_table, stage_agreement, type_report, validity_report,
    JudgmentIndex,
};
use cqgen_core::project::{Project, ProjectPaths};
use cqgen_service::ServiceConfig;

use crate::{
    Cli, Command, ExportArgs, Format, GenerateArgs, IngestArgs, OutputArgs, PromptArg, ReportArgs, ReportKind,
    ServeArgs,
};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => ingest(cli, a),
        Command::Instantiate(a) => instantiate(cli, a),
        Command::Generate(a) => generate(cli, a),
        Command::Parse(a) => parse(cli, a),
        Command::Report(a) => report(cli, a),
        Command::Serve(a) => serve(cli, a),
        Command::Export(a) => export(cli, a),
        Command::Agreement(a) => agreement(cli, a),
    }
}

fn project_dir<'a>(cli: &'a Cli, out: &'a OutputArgs) -> &'a Path {
    out.input.as_deref().unwrap_or(&cli.data_dir)
}

fn load(cli: &Cli, out: &OutputArgs) -> Result<Project> {
    let dir = project_dir(cli, out);
    Project::load(dir).with_context(|| format!("loading project {}", dir.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.is_empty() && !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn choose(format: Format, table: impl FnOnce() -> String, records: impl FnOnce() -> String) -> String {
    match format {
        Format::Table => table(),
        Format::Records => records(),
    }
}

fn ingest(cli: &Cli, a: &IngestArgs) -> Result<()> {
    if a.merge_floor > a.split_ceiling {
        bail!("--merge-floor {} exceeds --split-ceiling {}", a.merge_floor, a.split_ceiling);
    }
    let cfg = PreprocessConfig { split_ceiling: a.split_ceiling, merge_floor: a.merge_floor };
    let corpus = ingest_dir(&a.input, &cfg, cli.exec()).with_context(|| format!("ingesting {}", a.input.display()))?;
    let out = a.out.clone().unwrap_or_else(|| ProjectPaths::new(&cli.data_dir).snapshot());
    write_snapshot(&out, &corpus).with_context(|| format!("writing {}", out.display()))?;
    let c = corpus.counts();
    eprintln!(
        "{} interventions ({} with arguments), {} arguments -> {}",
        c.interventions,
        c.with_arguments,
        c.arguments,
        out.display()
    );
    Ok(())
}

fn instantiate(cli: &Cli, a: &OutputArgs) -> Result<()> {
    let project = load(cli, a)?;
    let state = project.state(cli.exec())?;
    let text = choose(
        a.format,
        || {
            let rows: Vec<Vec<String>> = state
                .theory_cqs
                .iter()
                .map(|c| {
                    let status = if c.discarded {
                        "discarded"
                    } else if c.postedit_text.is_some() {
                        "post-edited"
                    } else if c.needs_postedit {
                        "flagged"
                    } else {
                        ""
                    };
                    vec![c.id.clone(), status.into(), c.postedit_text.clone().unwrap_or_else(|| c.text.clone())]
                })
                .collect();
            render_table(&["Theory-CQ", "Status", "Text"], &rows)
        },
        || jsonl::to_string(&state.theory_cqs),
    );
    emit(a.out.as_deref(), &text)
}

fn generate(cli: &Cli, a: &GenerateArgs) -> Result<()> {
    let project =
        Project::load(&cli.data_dir).with_context(|| format!("loading project {}", cli.data_dir.display()))?;
    let kinds: Vec<PromptKind> = if a.prompt.is_empty() {
        PromptKind::ALL.to_vec()
    } else {
        a.prompt
            .iter()
            .map(|p| match p {
                PromptArg::Q => PromptKind::QueryOnly,
                PromptArg::Dq => PromptKind::DefinitionPlusQuery,
            })
            .collect()
    };
    for id in &a.intervention {
        if project.corpus.intervention(id).is_none() {
            bail!("unknown intervention {id}");
        }
    }
    let decoding = Decoding { temperature: a.temperature, max_tokens: a.max_tokens, seed: a.seed };
    let mut ids = RunLog::from_runs(&project.runs);
    let mut requests = Vec::new();
    for iv in &project.corpus.interventions {
        if !a.intervention.is_empty() && !a.intervention.contains(&iv.id) {
            continue;
        }
        for kind in &kinds {
            for model in &a.model {
                let id = ids.next_id(&iv.id, model, *kind);
                requests.push(RunRequest::new(id, iv, model, *kind, decoding.clone()));
            }
        }
    }
    let mut endpoint = EndpointConfig::new(&a.endpoint).with_env_key();
    endpoint.retries = a.retries;
    let client = ChatClient::new(endpoint)?;
    let total = requests.len();
    let rt = tokio::runtime::Runtime::new()?;
    let results = rt.block_on(generate_batch(&client, requests, a.parallel));

    let mut ok = Vec::new();
    let mut first_err = None;
    for r in results {
        match r {
            Ok(run) => ok.push(run),
            Err(e) => {
                eprintln!("{e}");
                first_err.get_or_insert(e);
            }
        }
    }
    let runs_path = project.paths.runs();
    jsonl::append(&runs_path, &ok).with_context(|| format!("appending to {}", runs_path.display()))?;
    eprintln!("{} of {total} runs stored in {}", ok.len(), runs_path.display());
    if let Some(e) = first_err {
        return Err(anyhow::Error::new(e).context(format!("{} of {total} runs failed", total - ok.len())));
    }
    Ok(())
}

fn parse(cli: &Cli, a: &OutputArgs) -> Result<()> {
    let project = load(cli, a)?;
    let candidates = project.candidates(cli.exec());
    let path: PathBuf = a.out.clone().unwrap_or_else(|| project.paths.candidates());
    jsonl::write(&path, &candidates).with_context(|| format!("writing {}", path.display()))?;
    let unique = candidates.iter().filter(|c| c.duplicate_of.is_none()).count();
    eprintln!(
        "{} runs, {} candidates ({unique} unique per intervention) -> {}",
        project.runs.len(),
        candidates.len(),
        path.display()
    );
    Ok(())
}

fn counts_table(c: &CorpusCounts) -> String {
    let mut rows: Vec<Vec<String>> = c
        .by_dataset
        .iter()
        .map(|(d, r)| {
            vec![
                d.as_str().to_string(),
                r.interventions.to_string(),
                r.with_arguments.to_string(),
                r.arguments.to_string(),
            ]
        })
        .collect();
    rows.push(vec!["All".into(), c.interventions.to_string(), c.with_arguments.to_string(), c.arguments.to_string()]);
    render_table(&["Dataset", "Interventions", "With arguments", "Arguments"], &rows)
}

fn report(cli: &Cli, a: &ReportArgs) -> Result<()> {
    let out = &a.output;
    if a.kind == ReportKind::Counts {
        // Accepts a snapshot file as well as a project directory.
        let dir = project_dir(cli, out);
        let path = if dir.is_file() { dir.to_path_buf() } else { ProjectPaths::new(dir).snapshot() };
        let corpus = read_snapshot(&path).with_context(|| format!("reading {}", path.display()))?;
        let c = corpus.counts();
        let text = choose(out.format, || counts_table(&c), || jsonl::to_string(std::slice::from_ref(&c)));
        return emit(out.output_path(), &text);
    }
    let project = load(cli, out)?;
    let state = project.state(cli.exec())?;
    let text = match a.kind {
        ReportKind::Counts => unreachable!(),
        ReportKind::Relevance => {
            let r = relevance_report(&state)?;
            choose(out.format, || r.table(), || r.records())
        }
        ReportKind::Matching => {
            let r = matching_report(&state)?;
            choose(out.format, || r.table(), || r.records())
        }
        ReportKind::Validity => {
            let r = validity_report(&state)?;
            choose(out.format, || r.table(), || r.records())
        }
        ReportKind::Types => {
            let r = type_report(&state)?;
            choose(out.format, || r.table(), || r.records())
        }
        ReportKind::Dataset => {
            let d = assemble_dataset(&state)?;
            choose(out.format, || d.summary.table(), || d.summary.records())
        }
    };
    emit(out.output_path(), &text)
}

impl OutputArgs {
    fn output_path(&self) -> Option<&Path> {
        self.out.as_deref()
    }
}

fn serve(cli: &Cli, a: &ServeArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&a.double_rate) {
        bail!("--double-rate must be in [0, 1], got {}", a.double_rate);
    }
    let mut cfg = ServiceConfig::new(&cli.data_dir);
    cfg.listen = a.listen;
    cfg.roster = a.roster.clone();
    cfg.quota.double_rate = a.double_rate;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(cqgen_service::serve(cfg))?;
    Ok(())
}

fn export(cli: &Cli, a: &ExportArgs) -> Result<()> {
    let project = load(cli, &a.output)?;
    let state = project.state(cli.exec())?;
    let dataset = assemble_dataset(&state)?;
    if let Some(path) = &a.no_argument {
        jsonl::write(path, &dataset.no_argument).with_context(|| format!("writing {}", path.display()))?;
    }
    let text = choose(a.output.format, || dataset.summary.table(), || jsonl::to_string(&dataset.entries));
    match (&a.output.out, a.output.format) {
        // A file always gets the records; the table goes to stdout.
        (Some(path), _) => {
            jsonl::write(path, &dataset.entries).with_context(|| format!("writing {}", path.display()))?;
            if a.output.format == Format::Table {
                emit(None, &text)?;
            }
            Ok(())
        }
        (None, _) => emit(None, &text),
    }
}

fn agreement(cli: &Cli, a: &OutputArgs) -> Result<()> {
    let project = load(cli, a)?;
    let index = JudgmentIndex::build(&project.judgments)?;
    let rows = stage_agreement(&index);
    let text = choose(
        a.format,
        || {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.stage.to_string(),
                        r.items.to_string(),
                        r.kappa.map(|k| format!("{k:.3}")).unwrap_or_else(|| "-".into()),
                    ]
                })
                .collect();
            render_table(&["Stage", "Shared items", "Kappa"], &table)
        },
        || jsonl::to_string(&rows),
    );
    emit(a.out.as_deref(), &text)
}
