//! End-to-end question answering over retrieved context.
//!
//! Every pipeline returns an [`Answer`] whose trace lists each retrieval
//! (with the document and relation ids it returned) and each model call
//! (with its prompt, fingerprint and raw output), in order.

mod flows;
mod render;
mod retriever;

pub use flows::{
    answer_cot, answer_decomposition, answer_naive, answer_sa, answer_single, decompose, CotStep,
    Decomposition, Subquestion, DEFAULT_MAX_STEPS,
};
pub use render::{answering_input, qa_pairs, reasoning_input, render_context};
pub use retriever::{ChunkRetriever, RetrievalRecord, Retriever, SaRetriever};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::normalize_answer;
use crate::gateway::{GatewayError, MockRule, ModelGateway};
use crate::graph::{GraphError, GraphStore};
use crate::ingest::ModelCall;
use crate::prompts::Prompt;
use crate::retrieval::RetrievalConfig;

pub const INSUFFICIENT: &str = "Insufficient Information";

pub fn is_insufficient(final_answer: &str) -> bool {
    normalize_answer(final_answer) == "insufficient information"
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Retrieval(RetrievalRecord),
    Model {
        prompt: Prompt,
        #[serde(flatten)]
        call: ModelCall,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub reasoning: String,
    pub final_answer: String,
    pub insufficient: bool,
    pub trace: Vec<TraceEvent>,
}

impl Answer {
    pub fn new(reasoning: String, final_answer: String, trace: Vec<TraceEvent>) -> Self {
        Answer {
            insufficient: is_insufficient(&final_answer),
            reasoning,
            final_answer,
            trace,
        }
    }

    pub fn retrievals(&self) -> impl Iterator<Item = &RetrievalRecord> {
        self.trace.iter().filter_map(|e| match e {
            TraceEvent::Retrieval(r) => Some(r),
            TraceEvent::Model { .. } => None,
        })
    }

    /// Mock rules that answer every model call in the trace with the output
    /// it originally received, keyed by prompt fingerprint.
    pub fn replay_rules(&self) -> Vec<MockRule> {
        self.model_calls()
            .map(|c| MockRule {
                fingerprint: Some(c.fingerprint.clone()),
                response: serde_json::Value::String(c.raw_output.clone()),
                ..Default::default()
            })
            .collect()
    }

    pub fn model_calls(&self) -> impl Iterator<Item = &ModelCall> {
        self.trace.iter().filter_map(|e| match e {
            TraceEvent::Model { call, .. } => Some(call),
            TraceEvent::Retrieval(_) => None,
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineErrorKind {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("pipeline {pipeline} needs the {store} store")]
    MissingStore {
        pipeline: &'static str,
        store: &'static str,
    },
}

/// A failed pipeline run, with the trace recorded up to the failure.
#[derive(Debug, Error)]
#[error("{kind}")]
pub struct PipelineError {
    pub kind: PipelineErrorKind,
    pub trace: Vec<TraceEvent>,
}

impl<E: Into<PipelineErrorKind>> From<E> for PipelineError {
    fn from(e: E) -> Self {
        PipelineError {
            kind: e.into(),
            trace: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PipelineKind {
    #[serde(rename = "naive-k5")]
    NaiveK5,
    #[serde(rename = "naive-k10")]
    NaiveK10,
    #[serde(rename = "cot-k5")]
    CotK5,
    #[serde(rename = "cot-k10")]
    CotK10,
    #[serde(rename = "decomposition")]
    Decomposition,
    #[serde(rename = "sa")]
    Sa,
    #[serde(rename = "sa-cot")]
    SaCot,
    #[serde(rename = "sa-decomposition")]
    SaDecomposition,
}

/// Chunks retrieved per step by the decomposition baseline.
pub const DECOMPOSITION_K: usize = 5;

impl PipelineKind {
    pub const ALL: [PipelineKind; 8] = [
        PipelineKind::NaiveK5,
        PipelineKind::NaiveK10,
        PipelineKind::CotK5,
        PipelineKind::CotK10,
        PipelineKind::Decomposition,
        PipelineKind::Sa,
        PipelineKind::SaCot,
        PipelineKind::SaDecomposition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PipelineKind::NaiveK5 => "naive-k5",
            PipelineKind::NaiveK10 => "naive-k10",
            PipelineKind::CotK5 => "cot-k5",
            PipelineKind::CotK10 => "cot-k10",
            PipelineKind::Decomposition => "decomposition",
            PipelineKind::Sa => "sa",
            PipelineKind::SaCot => "sa-cot",
            PipelineKind::SaDecomposition => "sa-decomposition",
        }
    }

    /// Row label in the results table.
    pub fn label(self) -> &'static str {
        match self {
            PipelineKind::NaiveK5 => "Naive RAG",
            PipelineKind::NaiveK10 => "Naive RAG (k=10)",
            PipelineKind::CotK5 => "CoT RAG",
            PipelineKind::CotK10 => "CoT RAG (k=10)",
            PipelineKind::Decomposition => "Query-decomposition",
            PipelineKind::Sa => "SA-RAG",
            PipelineKind::SaCot => "SA-RAG + CoT",
            PipelineKind::SaDecomposition => "SA-RAG + decomposition",
        }
    }

    pub fn parse(name: &str) -> Option<PipelineKind> {
        PipelineKind::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn valid_names() -> String {
        PipelineKind::ALL.map(PipelineKind::name).join(", ")
    }

    pub fn uses_graph(self) -> bool {
        matches!(
            self,
            PipelineKind::Sa | PipelineKind::SaCot | PipelineKind::SaDecomposition
        )
    }
}

impl std::fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The stores a pipeline may read from.
#[derive(Debug, Clone, Copy, Default)]
pub struct Stores<'a> {
    pub graph: Option<&'a GraphStore>,
    pub chunks: Option<&'a GraphStore>,
}

pub fn run_pipeline(
    kind: PipelineKind,
    gateway: &dyn ModelGateway,
    stores: Stores<'_>,
    config: &RetrievalConfig,
    query: &str,
) -> Result<Answer, PipelineError> {
    let chunks = |k| {
        stores
            .chunks
            .map(|store| ChunkRetriever { store, k })
            .ok_or(PipelineErrorKind::MissingStore {
                pipeline: kind.name(),
                store: "chunks",
            })
    };
    let graph = || {
        stores
            .graph
            .map(|store| SaRetriever {
                store,
                config: *config,
            })
            .ok_or(PipelineErrorKind::MissingStore {
                pipeline: kind.name(),
                store: "graph",
            })
    };
    match kind {
        PipelineKind::NaiveK5 => answer_single(gateway, &chunks(5)?, query),
        PipelineKind::NaiveK10 => answer_single(gateway, &chunks(10)?, query),
        PipelineKind::CotK5 => answer_cot(gateway, &chunks(5)?, query, DEFAULT_MAX_STEPS),
        PipelineKind::CotK10 => answer_cot(gateway, &chunks(10)?, query, DEFAULT_MAX_STEPS),
        PipelineKind::Decomposition => {
            answer_decomposition(gateway, &chunks(DECOMPOSITION_K)?, query)
        }
        PipelineKind::Sa => answer_single(gateway, &graph()?, query),
        PipelineKind::SaCot => answer_cot(gateway, &graph()?, query, DEFAULT_MAX_STEPS),
        PipelineKind::SaDecomposition => answer_decomposition(gateway, &graph()?, query),
    }
}
