//! Scoring a pipeline over benchmark items and rendering the results table.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::warn;
use serde::{Deserialize, Serialize};

use super::dataset::QaItem;
use super::metrics::{exact_match, f1_score};
use super::EvalError;
use crate::pipelines::{Answer, PipelineError, TraceEvent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub item_id: String,
    pub pipeline: String,
    pub question: String,
    pub gold_answer: String,
    pub prediction: String,
    pub em: u8,
    pub f1: f64,
    /// Wall-clock milliseconds; omitted for deterministic backends so that
    /// repeated runs produce identical files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<u64>,
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// `file:line` of this item's trace.
    pub trace: String,
    /// Left empty for manual annotation.
    pub correctness: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub pipeline: String,
    pub label: String,
    pub items: usize,
    pub failures: usize,
    pub em: f64,
    pub f1: f64,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub concurrency: usize,
    pub record_latency: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            concurrency: 4,
            record_latency: false,
        }
    }
}

#[derive(Serialize)]
struct TraceLine<'a> {
    item_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    answer: Option<&'a Answer>,
    #[serde(skip_serializing_if = "Option::is_none")]
    partial_trace: Option<&'a [TraceEvent]>,
}

pub fn records_path(out_dir: &Path, pipeline: &str) -> PathBuf {
    out_dir.join(format!("{pipeline}.records.jsonl"))
}

pub fn traces_path(out_dir: &Path, pipeline: &str) -> PathBuf {
    out_dir.join(format!("{pipeline}.traces.jsonl"))
}

fn evaluate_all<F>(
    items: &[QaItem],
    concurrency: usize,
    answer: &F,
) -> Vec<(Result<Answer, PipelineError>, u64)>
where
    F: Fn(&QaItem) -> Result<Answer, PipelineError> + Sync,
{
    let timed = |item: &QaItem| {
        let start = Instant::now();
        let result = answer(item);
        (result, start.elapsed().as_millis() as u64)
    };
    let mut results = Vec::with_capacity(items.len());
    for window in items.chunks(concurrency.max(1)) {
        let out: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = window
                .iter()
                .map(|item| s.spawn(move || timed(item)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("evaluation worker panicked"))
                .collect()
        });
        results.extend(out);
    }
    results
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, EvalError> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })
}

/// Runs `answer` on every item, writes one record and one trace line per
/// item under `out_dir`, and returns the aggregate. A failing item scores
/// zero and is flagged; it never aborts the run.
pub fn run_eval<F>(
    pipeline: &str,
    label: &str,
    items: &[QaItem],
    answer: F,
    options: &EvalOptions,
    out_dir: &Path,
) -> Result<EvalSummary, EvalError>
where
    F: Fn(&QaItem) -> Result<Answer, PipelineError> + Sync,
{
    if items.is_empty() {
        return Err(EvalError::Empty);
    }
    std::fs::create_dir_all(out_dir).map_err(|source| EvalError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let results = evaluate_all(items, options.concurrency, &answer);

    let rpath = records_path(out_dir, pipeline);
    let tpath = traces_path(out_dir, pipeline);
    let trace_file = tpath
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut records_out = create(&rpath)?;
    let mut traces_out = create(&tpath)?;
    let mut records = Vec::with_capacity(items.len());
    for (line, (item, (result, millis))) in items.iter().zip(&results).enumerate() {
        let (prediction, error, trace_line) = match result {
            Ok(a) => (
                a.final_answer.clone(),
                None,
                TraceLine {
                    item_id: &item.id,
                    answer: Some(a),
                    partial_trace: None,
                },
            ),
            Err(e) => {
                warn!("{pipeline}: item {} failed: {e}", item.id);
                (
                    String::new(),
                    Some(e.to_string()),
                    TraceLine {
                        item_id: &item.id,
                        answer: None,
                        partial_trace: Some(&e.trace),
                    },
                )
            }
        };
        let failed = error.is_some();
        let (em, f1) = if failed {
            (0, 0.0)
        } else {
            (
                exact_match(&prediction, &item.gold_answer, &item.gold_aliases),
                f1_score(&prediction, &item.gold_answer, &item.gold_aliases),
            )
        };
        let record = EvalRecord {
            item_id: item.id.clone(),
            pipeline: pipeline.to_string(),
            question: item.question.clone(),
            gold_answer: item.gold_answer.clone(),
            prediction,
            em,
            f1,
            latency_ms: options.record_latency.then_some(*millis),
            failed,
            error,
            trace: format!("{trace_file}:{}", line + 1),
            correctness: None,
        };
        let io = |source| EvalError::Io {
            path: rpath.display().to_string(),
            source,
        };
        serde_json::to_writer(&mut records_out, &record).map_err(|e| io(e.into()))?;
        records_out.write_all(b"\n").map_err(io)?;
        serde_json::to_writer(&mut traces_out, &trace_line).map_err(|e| io(e.into()))?;
        traces_out.write_all(b"\n").map_err(io)?;
        records.push(record);
    }
    records_out.flush().map_err(|source| EvalError::Io {
        path: rpath.display().to_string(),
        source,
    })?;
    traces_out.flush().map_err(|source| EvalError::Io {
        path: tpath.display().to_string(),
        source,
    })?;
    Ok(summarize(pipeline, label, &records))
}

pub fn summarize(pipeline: &str, label: &str, records: &[EvalRecord]) -> EvalSummary {
    let n = records.len().max(1) as f64;
    EvalSummary {
        pipeline: pipeline.to_string(),
        label: label.to_string(),
        items: records.len(),
        failures: records.iter().filter(|r| r.failed).count(),
        em: records.iter().map(|r| f64::from(r.em)).sum::<f64>() / n,
        f1: records.iter().map(|r| r.f1).sum::<f64>() / n,
    }
}

/// Recomputes the aggregate from a records file alone.
pub fn summarize_records_file(path: &Path, label: &str) -> Result<EvalSummary, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let records = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str::<EvalRecord>(l).map_err(|e| EvalError::Parse {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let pipeline = records
        .first()
        .map(|r| r.pipeline.clone())
        .unwrap_or_default();
    Ok(summarize(&pipeline, label, &records))
}

/// Methodology rows against EM, F1 and a Correctness column that is left
/// for manual annotation.
pub fn render_table(benchmark: &str, summaries: &[EvalSummary]) -> String {
    let mut out = format!(
        "| Methodology | {benchmark} EM | {benchmark} F1 | {benchmark} Correctness |\n|---|---|---|---|\n"
    );
    for s in summaries {
        out.push_str(&format!(
            "| {} | {:.2} | {:.2} | - |\n",
            s.label, s.em, s.f1
        ));
    }
    let failures: Vec<String> = summaries
        .iter()
        .filter(|s| s.failures > 0)
        .map(|s| format!("{} ({})", s.pipeline, s.failures))
        .collect();
    let items = summaries.first().map_or(0, |s| s.items);
    out.push_str(&format!("\nItems per pipeline: {items}. "));
    if failures.is_empty() {
        out.push_str("No failed items.\n");
    } else {
        out.push_str(&format!(
            "Failed items (scored 0): {}.\n",
            failures.join(", ")
        ));
    }
    out
}
