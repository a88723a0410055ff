use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sarag::commands::{build_gateway, cmd_ask, cmd_eval, cmd_index, CommandError, IndexMode};
use sarag::config::RunConfig;
use sarag::eval::DatasetFormat;
use sarag::pipelines::PipelineKind;
use sarag::retrieval::RetrievalConfig;

#[derive(Parser, Debug)]
#[command(
    name = "sarag",
    version,
    about = "Spreading-activation retrieval for multi-hop question answering"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Serve model calls from mock fixture files (a file or a directory).
    #[arg(long, global = true, value_name = "FIXTURES")]
    mock: Option<PathBuf>,
    /// Store directory holding graph.jsonl and/or chunks.jsonl.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// Retrieval preset: musique (k=3, n=4) or twowiki (k=10, n=3).
    #[arg(long, global = true, value_parser = parse_preset)]
    preset: Option<RetrievalConfig>,
    /// Seed entities taken from the top description matches.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Hop radius of the fetched subgraph.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Linear rescale factor for arc weights.
    #[arg(long, global = true)]
    c: Option<f64>,
    /// Activation threshold; entities strictly above it are activated
    #[arg(long = "tau-a", global = true)]
    tau_a: Option<f64>,
    /// Minimum query cosine for a document to enter the context
    #[arg(long = "tau-d", global = true)]
    tau_d: Option<f64>,
    /// Query cosine a relation must exceed to enter the context
    #[arg(long = "tau-r", global = true)]
    tau_r: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a store from a corpus (directory of .txt files or JSONL of {id, title, text}).
    Index {
        /// Corpus directory or JSONL file
        corpus: PathBuf,
        /// graph: knowledge graph store; chunks: similarity-only chunk store.
        #[arg(long, default_value = "graph", value_parser = parse_mode)]
        mode: IndexMode,
    },
    /// Answer one question.
    Ask {
        question: String,
        /// naive-k5, naive-k10, cot-k5, cot-k10, decomposition, sa, sa-cot or sa-decomposition
        #[arg(long, default_value = "sa", value_parser = parse_pipeline)]
        pipeline: PipelineKind,
        /// Also write the activation graph of the question in DOT format.
        #[arg(long)]
        emit_dot: bool,
        /// Directory for the trace and DOT files (default: the configured output directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate pipelines on a benchmark sample.
    Eval {
        /// Line-delimited benchmark file (default: eval.dataset from the config).
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Dataset layout: musique or twowiki
        #[arg(long, value_parser = parse_format)]
        format: Option<DatasetFormat>,
        /// Pipeline to run; repeat for several (default: run.pipelines from the config).
        #[arg(long, value_parser = parse_pipeline)]
        pipeline: Vec<PipelineKind>,
        /// Number of items drawn from the dataset
        #[arg(long)]
        sample: Option<usize>,
        /// Seed of the item sampler
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for records, traces and the results table
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration as TOML.
    Config,
}

fn parse_pipeline(s: &str) -> Result<PipelineKind, String> {
    PipelineKind::parse(s).ok_or_else(|| {
        format!(
            "unknown pipeline {s:?}; valid names: {}",
            PipelineKind::valid_names()
        )
    })
}

fn parse_mode(s: &str) -> Result<IndexMode, String> {
    IndexMode::parse(s).ok_or_else(|| format!("unknown mode {s:?}; valid modes: graph, chunks"))
}

fn parse_format(s: &str) -> Result<DatasetFormat, String> {
    DatasetFormat::parse(s)
        .ok_or_else(|| format!("unknown format {s:?}; valid formats: musique, twowiki"))
}

fn parse_preset(s: &str) -> Result<RetrievalConfig, String> {
    RetrievalConfig::preset(s)
        .ok_or_else(|| format!("unknown preset {s:?}; valid presets: musique, twowiki"))
}

fn effective_config(cli: &Cli) -> Result<RunConfig, CommandError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(p) = cli.preset {
        config.retrieval.k = p.k;
        config.retrieval.n = p.n;
    }
    let r = &mut config.retrieval;
    r.k = cli.k.unwrap_or(r.k);
    r.n = cli.n.unwrap_or(r.n);
    r.c = cli.c.unwrap_or(r.c);
    r.tau_a = cli.tau_a.unwrap_or(r.tau_a);
    r.tau_d = cli.tau_d.unwrap_or(r.tau_d);
    r.tau_r = cli.tau_r.unwrap_or(r.tau_r);
    if let Some(mock) = &cli.mock {
        config.gateway.mock_fixtures = Some(mock.clone());
    }
    if let Some(store) = &cli.store {
        config.run.store = store.clone();
    }
    if let Command::Eval { sample, seed, .. } = &cli.command {
        if *sample == Some(0) {
            return Err(CommandError::Usage("--sample must be at least 1".into()));
        }
        config.eval.sample = sample.unwrap_or(config.eval.sample);
        config.eval.seed = seed.unwrap_or(config.eval.seed);
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CommandError> {
    let config = effective_config(&cli)?;
    match &cli.command {
        Command::Config => {
            print!("{}", config.render());
        }
        Command::Index { corpus, mode } => {
            let gateway = build_gateway(&config)?;
            let report = cmd_index(corpus, &config.run.store, *mode, &config, gateway.as_ref())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("serializable")
            );
        }
        Command::Ask {
            question,
            pipeline,
            emit_dot,
            out,
        } => {
            let gateway = build_gateway(&config)?;
            let out_dir = out.as_deref().unwrap_or(&config.run.output_dir);
            let output = cmd_ask(
                question,
                *pipeline,
                &config,
                gateway.as_ref(),
                &config.run.store,
                out_dir,
                *emit_dot,
            )?;
            println!("Reasoning: {}", output.answer.reasoning);
            println!("Answer: {}", output.answer.final_answer);
            println!("Trace: {}", output.trace_path.display());
            if let Some(dot) = output.dot_path {
                println!("DOT: {}", dot.display());
            }
        }
        Command::Eval {
            dataset,
            format,
            pipeline,
            out,
            ..
        } => {
            let dataset = dataset
                .clone()
                .or_else(|| config.eval.dataset.clone())
                .ok_or_else(|| {
                    CommandError::Usage("no dataset: pass --dataset or set eval.dataset".into())
                })?;
            let format = format.unwrap_or(config.eval.format);
            let pipelines = if pipeline.is_empty() {
                config.run.pipelines.clone()
            } else {
                pipeline.clone()
            };
            let out_dir = out.as_deref().unwrap_or(&config.run.output_dir);
            let gateway = build_gateway(&config)?;
            let store_dir = cli.store.as_deref();
            let outcome = cmd_eval(
                &dataset,
                format,
                &pipelines,
                &config,
                gateway.as_ref(),
                store_dir,
                out_dir,
            )?;
            print!("{}", outcome.table);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
