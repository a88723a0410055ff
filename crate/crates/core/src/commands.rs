//! The operations behind each CLI subcommand.

use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;
use thiserror::Error;

use crate::config::{RunConfig, RunConfigError};
use crate::eval::{
    corpus_from_items, load_dataset, render_table, run_eval, sample, DatasetFormat, EvalError,
    EvalOptions, EvalSummary,
};
use crate::gateway::{GatewayError, HttpGateway, MockGateway, ModelGateway};
use crate::graph::{GraphError, GraphStore, SnapshotError};
use crate::ingest::{
    index_chunks, index_corpus, load_corpus, CorpusError, IndexError, IndexParams, IndexReport,
    SourceDocument,
};
use crate::pipelines::{run_pipeline, Answer, PipelineError, PipelineKind, Stores};
use crate::retrieval::{export_activation_dot, retrieve, RetrievalConfig};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{0}")]
    Usage(String),
    #[error("no {kind} store at {path}; build it first with `sarag index --mode {kind} --store {dir} <corpus>`")]
    MissingStore {
        kind: &'static str,
        path: String,
        dir: String,
    },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] RunConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl CommandError {
    /// 1 for usage errors, 2 for everything that failed at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Usage(_) | CommandError::Config(RunConfigError::Invalid(_)) => 1,
            CommandError::Config(RunConfigError::Parse { .. }) => 1,
            _ => 2,
        }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CommandError> {
    let io = |source| CommandError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CommandError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(path, text.as_bytes())
}

/// Mock backend when fixtures are configured, otherwise the HTTP backend.
pub fn build_gateway(config: &RunConfig) -> Result<Box<dyn ModelGateway>, CommandError> {
    match &config.gateway.mock_fixtures {
        Some(path) => Ok(Box::new(MockGateway::from_path(path)?)),
        None => Ok(Box::new(HttpGateway::new(config.gateway.http_settings())?)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexMode {
    Graph,
    Chunks,
}

impl IndexMode {
    pub fn parse(s: &str) -> Option<IndexMode> {
        match s {
            "graph" => Some(IndexMode::Graph),
            "chunks" => Some(IndexMode::Chunks),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IndexMode::Graph => "graph",
            IndexMode::Chunks => "chunks",
        }
    }
}

pub fn store_file(store_dir: &Path, mode: IndexMode) -> PathBuf {
    store_dir.join(format!("{}.jsonl", mode.name()))
}

pub fn report_file(store_dir: &Path, mode: IndexMode) -> PathBuf {
    store_dir.join(format!("{}.report.json", mode.name()))
}

fn build_store(
    documents: &[SourceDocument],
    mode: IndexMode,
    config: &RunConfig,
    gateway: &dyn ModelGateway,
) -> Result<(GraphStore, IndexReport), CommandError> {
    let mut store = GraphStore::new();
    let report = match mode {
        IndexMode::Graph => index_corpus(
            documents,
            &mut store,
            gateway,
            IndexParams {
                chunking: config.chunking.graph,
                concurrency: config.chunking.concurrency,
            },
        )?,
        IndexMode::Chunks => index_chunks(
            documents,
            &mut store,
            gateway,
            IndexParams {
                chunking: config.chunking.chunks,
                concurrency: config.chunking.concurrency,
            },
        )?,
    };
    Ok((store, report))
}

/// Indexes a corpus into `<store_dir>/<mode>.jsonl` and writes the report
/// next to it.
pub fn cmd_index(
    corpus: &Path,
    store_dir: &Path,
    mode: IndexMode,
    config: &RunConfig,
    gateway: &dyn ModelGateway,
) -> Result<IndexReport, CommandError> {
    let documents = load_corpus(corpus)?;
    let (store, report) = build_store(&documents, mode, config, gateway)?;
    store.save(&store_file(store_dir, mode))?;
    write_json(&report_file(store_dir, mode), &report)?;
    info!(
        "{} store written to {}",
        mode.name(),
        store_file(store_dir, mode).display()
    );
    Ok(report)
}

fn load_store(store_dir: &Path, mode: IndexMode) -> Result<GraphStore, CommandError> {
    let path = store_file(store_dir, mode);
    if !path.exists() {
        return Err(CommandError::MissingStore {
            kind: mode.name(),
            path: path.display().to_string(),
            dir: store_dir.display().to_string(),
        });
    }
    Ok(GraphStore::load(&path)?)
}

fn required_mode(kind: PipelineKind) -> IndexMode {
    if kind.uses_graph() {
        IndexMode::Graph
    } else {
        IndexMode::Chunks
    }
}

#[derive(Debug, Serialize)]
struct AskTrace<'a> {
    question: &'a str,
    pipeline: PipelineKind,
    retrieval: &'a RetrievalConfig,
    answer: &'a Answer,
}

#[derive(Debug)]
pub struct AskOutput {
    pub answer: Answer,
    pub trace_path: PathBuf,
    pub dot_path: Option<PathBuf>,
}

/// Answers one question and writes `<out_dir>/ask-<pipeline>.trace.json`;
/// with `emit_dot`, also the activation graph of the question as
/// `<out_dir>/ask-<pipeline>.dot`.
pub fn cmd_ask(
    question: &str,
    pipeline: PipelineKind,
    config: &RunConfig,
    gateway: &dyn ModelGateway,
    store_dir: &Path,
    out_dir: &Path,
    emit_dot: bool,
) -> Result<AskOutput, CommandError> {
    if question.trim().is_empty() {
        return Err(CommandError::Usage("the question is empty".into()));
    }
    if emit_dot && !pipeline.uses_graph() {
        return Err(CommandError::Usage(format!(
            "--emit-dot needs a graph pipeline (sa, sa-cot, sa-decomposition), not {pipeline}"
        )));
    }
    let store = load_store(store_dir, required_mode(pipeline))?;
    let stores = if pipeline.uses_graph() {
        Stores {
            graph: Some(&store),
            chunks: None,
        }
    } else {
        Stores {
            graph: None,
            chunks: Some(&store),
        }
    };
    let answer = run_pipeline(pipeline, gateway, stores, &config.retrieval, question)?;
    let trace_path = out_dir.join(format!("ask-{pipeline}.trace.json"));
    write_json(
        &trace_path,
        &AskTrace {
            question,
            pipeline,
            retrieval: &config.retrieval,
            answer: &answer,
        },
    )?;
    let dot_path = if emit_dot {
        let query = gateway.embed_one(question)?;
        let sa = retrieve(&store, &query, &config.retrieval)?;
        let path = out_dir.join(format!("ask-{pipeline}.dot"));
        write_file(
            &path,
            export_activation_dot(&sa.subgraph, &sa.activation, None).as_bytes(),
        )?;
        Some(path)
    } else {
        None
    };
    Ok(AskOutput {
        answer,
        trace_path,
        dot_path,
    })
}

#[derive(Debug, Serialize)]
pub struct EvalOutcome {
    pub benchmark: String,
    pub items: Vec<String>,
    pub summaries: Vec<EvalSummary>,
    #[serde(skip)]
    pub table: String,
}

/// Evaluates each pipeline on a seeded sample of the dataset.
///
/// With `store_dir`, the stores found there are used. Without it, the
/// stores the pipelines need are built from the sampled items' paragraphs
/// and saved under `<out_dir>/store`.
pub fn cmd_eval(
    dataset: &Path,
    format: DatasetFormat,
    pipelines: &[PipelineKind],
    config: &RunConfig,
    gateway: &dyn ModelGateway,
    store_dir: Option<&Path>,
    out_dir: &Path,
) -> Result<EvalOutcome, CommandError> {
    if pipelines.is_empty() {
        return Err(CommandError::Usage("no pipelines selected".into()));
    }
    if config.eval.sample == 0 {
        return Err(CommandError::Usage("--sample must be at least 1".into()));
    }
    let items = load_dataset(dataset, format)?;
    let items = sample(&items, config.eval.sample, config.eval.seed)?;

    let mut graph = None;
    let mut chunks = None;
    for mode in [IndexMode::Graph, IndexMode::Chunks] {
        if !pipelines.iter().any(|p| required_mode(*p) == mode) {
            continue;
        }
        let store = match store_dir {
            Some(dir) => load_store(dir, mode)?,
            None => {
                let dir = out_dir.join("store");
                let (store, report) =
                    build_store(&corpus_from_items(&items), mode, config, gateway)?;
                store.save(&store_file(&dir, mode))?;
                write_json(&report_file(&dir, mode), &report)?;
                store
            }
        };
        match mode {
            IndexMode::Graph => graph = Some(store),
            IndexMode::Chunks => chunks = Some(store),
        }
    }
    let stores = Stores {
        graph: graph.as_ref(),
        chunks: chunks.as_ref(),
    };
    let options = EvalOptions {
        concurrency: config.eval.concurrency,
        record_latency: !gateway.is_deterministic(),
    };
    let mut summaries = Vec::new();
    for &kind in pipelines {
        let summary = run_eval(
            kind.name(),
            kind.label(),
            &items,
            |item| run_pipeline(kind, gateway, stores, &config.retrieval, &item.question),
            &options,
            out_dir,
        )?;
        summaries.push(summary);
    }
    let table = render_table(format.label(), &summaries);
    write_file(&out_dir.join("results.md"), table.as_bytes())?;
    let outcome = EvalOutcome {
        benchmark: format.label().to_string(),
        items: items.iter().map(|i| i.id.clone()).collect(),
        summaries,
        table,
    };
    write_json(&out_dir.join("summary.json"), &outcome)?;
    Ok(outcome)
}
