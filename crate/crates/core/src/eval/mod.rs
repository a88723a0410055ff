//! Benchmark loading, sampling, scoring and result tables.

mod dataset;
mod harness;
mod metrics;

pub use dataset::{corpus_from_items, load_dataset, sample, DatasetFormat, Paragraph, QaItem};
pub use harness::{
    records_path, render_table, run_eval, summarize, summarize_records_file, traces_path,
    EvalOptions, EvalRecord, EvalSummary,
};
pub use metrics::{exact_match, f1_score, normalize_answer};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("sample of {requested} requested but only {available} items available")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("nothing to evaluate: the item list is empty")]
    Empty,
}
