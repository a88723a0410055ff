#![allow(dead_code)]

pub mod bridge;

use std::path::{Path, PathBuf};

use sarag::commands::{cmd_ask, cmd_index, IndexMode};
use sarag::config::RunConfig;
use sarag::gateway::MockGateway;
use sarag::ingest::IndexReport;
use sarag::pipelines::{Answer, PipelineKind};

pub const QUESTION: &str = "In which town is the shipyard founded by Ada Marrow located?";

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn mock_config() -> RunConfig {
    let mut config = RunConfig::default();
    config.gateway.mock_fixtures = Some(fixtures().join("mock"));
    config
}

pub struct EndToEnd {
    pub graph_report: IndexReport,
    pub chunks_report: IndexReport,
    pub answers: Vec<(PipelineKind, Answer)>,
}

/// Indexes the synthetic corpus into both stores under `dir/store`, then
/// asks the fixture question with every pipeline, writing into `dir/out`.
pub fn run_end_to_end(dir: &Path) -> EndToEnd {
    let config = mock_config();
    let gateway = MockGateway::from_path(&fixtures().join("mock")).unwrap();
    let store = dir.join("store");
    let corpus = fixtures().join("corpus");
    let graph_report = cmd_index(&corpus, &store, IndexMode::Graph, &config, &gateway).unwrap();
    let chunks_report = cmd_index(&corpus, &store, IndexMode::Chunks, &config, &gateway).unwrap();
    let answers = PipelineKind::ALL
        .into_iter()
        .map(|p| {
            let out = cmd_ask(
                QUESTION,
                p,
                &config,
                &gateway,
                &store,
                &dir.join("out"),
                p.uses_graph(),
            )
            .unwrap();
            (p, out.answer)
        })
        .collect();
    EndToEnd {
        graph_report,
        chunks_report,
        answers,
    }
}

/// Every file under `dir`, as (relative path, bytes), sorted by path.
pub fn snapshot_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

/// Files of an end-to-end run that are kept as golden copies: index
/// reports, answer traces and DOT exports (store snapshots are compared
/// across runs instead, being large).
pub fn golden_subset(files: &[(String, Vec<u8>)]) -> Vec<(String, Vec<u8>)> {
    files
        .iter()
        .filter(|(name, _)| !name.ends_with(".jsonl"))
        .map(|(name, bytes)| (name.replace('\\', "/"), bytes.clone()))
        .collect()
}

/// First difference between `actual` and the golden files under `dir`.
pub fn golden_mismatch(actual: &[(String, Vec<u8>)], dir: &Path) -> Option<String> {
    let expected = snapshot_dir(dir);
    let names = |v: &[(String, Vec<u8>)]| {
        v.iter()
            .map(|(n, _)| n.replace('\\', "/"))
            .collect::<Vec<_>>()
    };
    if names(actual) != names(&expected) {
        return Some(format!(
            "file set differs: {:?} vs {:?}",
            names(actual),
            names(&expected)
        ));
    }
    actual
        .iter()
        .zip(&expected)
        .find(|((_, a), (_, e))| a != e)
        .map(|((name, _), _)| format!("{name} differs from its golden copy"))
}
